/**
 * @file external_scorer.h
 * @brief NoteScorer that delegates to an out-of-process model over
 *        line-delimited JSON (stdio of a child process, or TCP).
 *
 * Request (one line):  {"id":N,"context":[[kind,value],...],"allowed":[note,...]}
 * Response (one line): {"id":N,"logits":[x,...]}  or  {"id":N,"error":"..."}
 *
 * `allowed` holds NOTE token values (voice * 128 + pitch); logits come back
 * in the same order. Masking and sampling stay in the engine.
 *
 * Writes to a dead peer raise SIGPIPE unless the caller ignores it; the
 * harmonize CLI does.
 */

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "harmonizer/harmony_engine.h"

namespace harmonizer {

/// Bidirectional newline-framed text channel.
class LineChannel {
 public:
  virtual ~LineChannel() = default;
  virtual void write_line(const std::string& line) = 0;
  /// Throws std::runtime_error on EOF or read failure.
  virtual std::string read_line() = 0;
};

/// Runs `command` through /bin/sh with its stdin/stdout connected to the channel.
std::unique_ptr<LineChannel> spawn_process_channel(const std::string& command);
/// Connects to "host:port".
std::unique_ptr<LineChannel> connect_tcp_channel(const std::string& address);

std::string make_bridge_request(std::int64_t id, std::span<const Token> context, std::span<const int> allowed);

/// Parses a response line and validates id and length. Throws
/// std::runtime_error on an error object, id mismatch, wrong logit count or
/// non-finite logits.
std::vector<double> parse_bridge_response(const std::string& line, std::int64_t expected_id,
                                          std::size_t expected_count);

class ExternalScorer final : public NoteScorer {
 public:
  explicit ExternalScorer(std::unique_ptr<LineChannel> channel) : channel_(std::move(channel)) {}

  std::string name() const override { return "external"; }
  bool deterministic() const override { return false; }
  std::vector<double> score(const ScoringContext& ctx, std::span<const int> candidates) override;

  std::int64_t requests_sent() const { return next_id_ - 1; }

 private:
  std::unique_ptr<LineChannel> channel_;
  std::int64_t next_id_ = 1;
};

}  // namespace harmonizer
