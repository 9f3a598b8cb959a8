#include "harmonizer/external_scorer.h"

#include <netdb.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <json.hpp>

namespace harmonizer {
namespace {

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw std::runtime_error(std::string("bridge write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

class FdLineReader {
 public:
  std::string read_line(int fd) {
    for (;;) {
      const auto nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(fd, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error(std::string("bridge read failed: ") + std::strerror(errno));
      }
      if (n == 0) throw std::runtime_error("bridge closed the connection");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  std::string buffer_;
};

class ProcessChannel final : public LineChannel {
 public:
  explicit ProcessChannel(const std::string& command) {
    int to_child[2];
    int from_child[2];
    if (::pipe(to_child) != 0) throw std::runtime_error("pipe() failed");
    if (::pipe(from_child) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw std::runtime_error("pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw std::runtime_error("fork() failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
  }

  ~ProcessChannel() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      ::waitpid(pid_, &status, 0);
    }
  }

  void write_line(const std::string& line) override { write_all(write_fd_, line + "\n"); }
  std::string read_line() override { return reader_.read_line(read_fd_); }

 private:
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
  FdLineReader reader_;
};

class TcpChannel final : public LineChannel {
 public:
  explicit TcpChannel(const std::string& address) {
    const auto colon = address.rfind(':');
    if (colon == std::string::npos) throw std::invalid_argument("external address must be HOST:PORT");
    const std::string host = address.substr(0, colon);
    const std::string port = address.substr(colon + 1);

    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(host.c_str(), port.c_str(), &hints, &res) != 0 || res == nullptr) {
      throw std::runtime_error("cannot resolve " + address);
    }
    for (addrinfo* p = res; p != nullptr; p = p->ai_next) {
      fd_ = ::socket(p->ai_family, p->ai_socktype, p->ai_protocol);
      if (fd_ < 0) continue;
      if (::connect(fd_, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd_);
      fd_ = -1;
    }
    ::freeaddrinfo(res);
    if (fd_ < 0) throw std::runtime_error("cannot connect to " + address);
  }

  ~TcpChannel() override {
    if (fd_ >= 0) ::close(fd_);
  }

  void write_line(const std::string& line) override {
    const std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::send(fd_, data.data() + off, data.size() - off, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw std::runtime_error(std::string("bridge send failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }
  std::string read_line() override { return reader_.read_line(fd_); }

 private:
  int fd_ = -1;
  FdLineReader reader_;
};

}  // namespace

std::unique_ptr<LineChannel> spawn_process_channel(const std::string& command) {
  return std::make_unique<ProcessChannel>(command);
}

std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& address) {
  return std::make_unique<TcpChannel>(address);
}

std::string make_bridge_request(std::int64_t id, std::span<const Token> context, std::span<const int> allowed) {
  nlohmann::ordered_json j;
  j["id"] = id;
  auto ctx = nlohmann::json::array();
  for (const auto& t : context) ctx.push_back({static_cast<int>(t.kind), t.value});
  j["context"] = std::move(ctx);
  j["allowed"] = std::vector<int>(allowed.begin(), allowed.end());
  return j.dump();
}

std::vector<double> parse_bridge_response(const std::string& line, std::int64_t expected_id,
                                          std::size_t expected_count) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bridge response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_number_integer()) {
    throw std::runtime_error("bridge response without an integer id");
  }
  if (j["id"].get<std::int64_t>() != expected_id) {
    throw std::runtime_error("bridge response id " + j["id"].dump() + " does not match request " +
                             std::to_string(expected_id));
  }
  if (j.contains("error")) throw std::runtime_error("bridge error: " + j["error"].dump());
  if (!j.contains("logits") || !j["logits"].is_array()) throw std::runtime_error("bridge response without logits");
  const auto& arr = j["logits"];
  if (arr.size() != expected_count) {
    throw std::runtime_error("bridge returned " + std::to_string(arr.size()) + " logits for " +
                             std::to_string(expected_count) + " candidates");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) throw std::runtime_error("bridge returned a non-numeric logit");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw std::runtime_error("bridge returned a non-finite logit");
    out.push_back(x);
  }
  return out;
}

std::vector<double> ExternalScorer::score(const ScoringContext& ctx, std::span<const int> candidates) {
  std::vector<int> allowed;
  allowed.reserve(candidates.size());
  for (int p : candidates) allowed.push_back(note_token_value(ctx.voice, p));
  const std::int64_t id = next_id_++;
  channel_->write_line(make_bridge_request(id, ctx.tokens, allowed));
  return parse_bridge_response(channel_->read_line(), id, candidates.size());
}

}  // namespace harmonizer
