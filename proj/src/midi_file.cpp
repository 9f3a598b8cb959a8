#include "harmonizer/midi_file.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <iterator>
#include <map>
#include <string>
#include <tuple>

#include "harmonizer/errors.h"

namespace harmonizer {
namespace {

constexpr std::uint32_t kMicrosPerQuarter = 500000;  // 120 BPM
constexpr int kVelocity = 80;

void put_be32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<unsigned char>((v >> s) & 0xFF));
}

void put_be16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v >> 8));
  out.push_back(static_cast<unsigned char>(v & 0xFF));
}

void put_vlq(std::vector<unsigned char>& out, std::uint32_t v) {
  unsigned char buf[5];
  int n = 0;
  buf[n++] = static_cast<unsigned char>(v & 0x7F);
  while ((v >>= 7) != 0) buf[n++] = static_cast<unsigned char>((v & 0x7F) | 0x80);
  while (n > 0) out.push_back(buf[--n]);
}

std::int64_t to_midi_ticks(Tick t) {
  return std::llround(ticks_to_seconds(t) * kExportPpq * kExportBpm / 60.0);
}

struct TrackEvent {
  std::int64_t tick;
  int order;  // note-offs sort before note-ons at the same tick
  std::vector<unsigned char> bytes;
};

std::vector<unsigned char> build_track(const NoteSequence& line, Voice voice) {
  const int channel = voice_index(voice);
  std::vector<TrackEvent> events;
  {
    std::string_view name = voice_name(voice);
    std::vector<unsigned char> meta{0xFF, 0x03};
    put_vlq(meta, static_cast<std::uint32_t>(name.size()));
    meta.insert(meta.end(), name.begin(), name.end());
    events.push_back({0, 0, std::move(meta)});
  }
  if (voice == Voice::Soprano) {
    events.push_back({0, 1,
                      {0xFF, 0x51, 0x03, static_cast<unsigned char>(kMicrosPerQuarter >> 16),
                       static_cast<unsigned char>((kMicrosPerQuarter >> 8) & 0xFF),
                       static_cast<unsigned char>(kMicrosPerQuarter & 0xFF)}});
  }
  events.push_back({0, 2,
                    {static_cast<unsigned char>(0xC0 | channel), static_cast<unsigned char>(channel)}});
  for (const auto& n : line) {
    const auto pitch = static_cast<unsigned char>(n.pitch);
    events.push_back({to_midi_ticks(n.onset), 4,
                      {static_cast<unsigned char>(0x90 | channel), pitch, kVelocity}});
    events.push_back({to_midi_ticks(n.end()), 3,
                      {static_cast<unsigned char>(0x80 | channel), pitch, 0}});
  }
  std::stable_sort(events.begin(), events.end(), [](const TrackEvent& a, const TrackEvent& b) {
    return std::tie(a.tick, a.order) < std::tie(b.tick, b.order);
  });

  std::vector<unsigned char> body;
  std::int64_t now = 0;
  for (const auto& e : events) {
    put_vlq(body, static_cast<std::uint32_t>(e.tick - now));
    now = e.tick;
    body.insert(body.end(), e.bytes.begin(), e.bytes.end());
  }
  body.insert(body.end(), {0x00, 0xFF, 0x2F, 0x00});

  std::vector<unsigned char> chunk{'M', 'T', 'r', 'k'};
  put_be32(chunk, static_cast<std::uint32_t>(body.size()));
  chunk.insert(chunk.end(), body.begin(), body.end());
  return chunk;
}

class Reader {
 public:
  Reader(std::span<const unsigned char> bytes, std::size_t pos, std::size_t end)
      : bytes_(bytes), pos_(pos), end_(end) {}

  bool done() const { return pos_ >= end_; }
  unsigned char peek() const {
    need(1);
    return bytes_[pos_];
  }
  unsigned char u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t vlq() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      unsigned char b = u8();
      v = (v << 7) | (b & 0x7F);
      if (!(b & 0x80)) return v;
    }
    throw FormatError("midi: variable-length quantity too long");
  }
  void skip(std::size_t n) {
    need(n);
    pos_ += n;
  }
  std::span<const unsigned char> take(std::size_t n) {
    need(n);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError("midi: truncated track");
  }
  std::span<const unsigned char> bytes_;
  std::size_t pos_;
  std::size_t end_;
};

std::uint32_t be32(const unsigned char* p) {
  return (static_cast<std::uint32_t>(p[0]) << 24) | (static_cast<std::uint32_t>(p[1]) << 16) |
         (static_cast<std::uint32_t>(p[2]) << 8) | p[3];
}

struct RawNote {
  std::int64_t on;
  std::int64_t off;
  int pitch;
  int velocity;
  int channel;
  int program;
  int track;
};

}  // namespace

std::vector<unsigned char> encode_arrangement_midi(const Arrangement& arr) {
  std::vector<unsigned char> out{'M', 'T', 'h', 'd'};
  put_be32(out, 6);
  put_be16(out, 1);
  put_be16(out, kVoiceCount);
  put_be16(out, kExportPpq);
  for (Voice v : {Voice::Soprano, Voice::Alto, Voice::Tenor, Voice::Bass}) {
    auto track = build_track(arr.line(v), v);
    out.insert(out.end(), track.begin(), track.end());
  }
  return out;
}

void export_midi(const Arrangement& arr, const std::filesystem::path& path) {
  auto bytes = encode_arrangement_midi(arr);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

MidiFileInfo parse_midi(std::span<const unsigned char> bytes) {
  if (bytes.size() < 14 || std::memcmp(bytes.data(), "MThd", 4) != 0) throw FormatError("midi: missing MThd");
  const std::uint32_t header_len = be32(bytes.data() + 4);
  if (header_len < 6 || 8 + header_len > bytes.size()) throw FormatError("midi: bad header length");
  MidiFileInfo info;
  info.format = (bytes[8] << 8) | bytes[9];
  const int declared_tracks = (bytes[10] << 8) | bytes[11];
  const int division = (bytes[12] << 8) | bytes[13];
  if (division & 0x8000) throw FormatError("midi: SMPTE time division is not supported");
  if (division == 0) throw FormatError("midi: zero PPQ");
  info.ppq = division;

  std::vector<RawNote> raw;
  std::vector<std::pair<std::int64_t, std::uint32_t>> tempo;  // (tick, us per quarter)

  std::size_t pos = 8 + header_len;
  int track = 0;
  while (pos + 8 <= bytes.size() && track < declared_tracks) {
    const std::uint32_t len = be32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (body + len > bytes.size()) throw FormatError("midi: chunk exceeds file size");
    if (std::memcmp(bytes.data() + pos, "MTrk", 4) != 0) {
      pos = body + len;
      continue;
    }

    Reader r(bytes, body, body + len);
    std::int64_t tick = 0;
    unsigned char status = 0;
    int programs[16];
    std::fill(std::begin(programs), std::end(programs), -1);
    int first_program = -1;
    std::size_t note_count = 0;
    std::map<std::pair<int, int>, std::deque<std::size_t>> sounding;  // (channel, pitch) -> raw index

    while (!r.done()) {
      tick += r.vlq();
      if (r.peek() & 0x80) {
        status = r.u8();
      } else if (status == 0 || status >= 0xF0) {
        throw FormatError("midi: running status without a previous status byte");
      }

      if (status == 0xFF) {
        const unsigned char type = r.u8();
        const std::uint32_t mlen = r.vlq();
        auto data = r.take(mlen);
        if (type == 0x51 && mlen == 3) {
          tempo.emplace_back(tick, (static_cast<std::uint32_t>(data[0]) << 16) | (data[1] << 8) | data[2]);
        }
        if (type == 0x2F) break;
        status = 0;
        continue;
      }
      if (status == 0xF0 || status == 0xF7) {
        r.skip(r.vlq());
        status = 0;
        continue;
      }

      const int channel = status & 0x0F;
      switch (status & 0xF0) {
        case 0x80:
        case 0x90: {
          const int pitch = r.u8() & 0x7F;
          const int velocity = r.u8() & 0x7F;
          auto key = std::make_pair(channel, pitch);
          if ((status & 0xF0) == 0x90 && velocity > 0) {
            const int program = programs[channel] >= 0 ? programs[channel] : channel;
            sounding[key].push_back(raw.size());
            raw.push_back({tick, -1, pitch, velocity, channel, program, track});
            ++note_count;
          } else if (auto it = sounding.find(key); it != sounding.end() && !it->second.empty()) {
            raw[it->second.front()].off = tick;
            it->second.pop_front();
          }
          break;
        }
        case 0xA0:
        case 0xB0:
        case 0xE0:
          r.skip(2);
          break;
        case 0xC0:
          programs[channel] = r.u8() & 0x7F;
          if (first_program < 0) first_program = programs[channel];
          break;
        case 0xD0:
          r.skip(1);
          break;
        default:
          throw FormatError("midi: unexpected status byte");
      }
    }
    for (auto& [key, queue] : sounding) {
      for (std::size_t idx : queue) raw[idx].off = tick;
    }
    info.programs_per_track.push_back(first_program);
    info.notes_per_track.push_back(note_count);
    ++track;
    pos = body + len;
  }
  info.track_count = track;

  std::stable_sort(tempo.begin(), tempo.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  auto seconds_at = [&](std::int64_t t) {
    double sec = 0.0;
    std::int64_t last_tick = 0;
    std::uint32_t us = kMicrosPerQuarter;
    for (const auto& [tt, tus] : tempo) {
      if (tt >= t) break;
      sec += static_cast<double>(tt - last_tick) * us / 1e6 / info.ppq;
      last_tick = tt;
      us = tus;
    }
    return sec + static_cast<double>(t - last_tick) * us / 1e6 / info.ppq;
  };

  for (const auto& n : raw) {
    info.notes.push_back({seconds_at(n.on), seconds_at(std::max(n.off, n.on)), n.pitch, n.velocity, n.channel,
                          n.program, n.track});
  }
  std::stable_sort(info.notes.begin(), info.notes.end(), [](const MidiNote& a, const MidiNote& b) {
    return std::tie(a.start, a.track, a.pitch) < std::tie(b.start, b.track, b.pitch);
  });
  return info;
}

MidiFileInfo read_midi(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return parse_midi(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

Arrangement arrangement_from_midi(const MidiFileInfo& info) {
  Arrangement arr;
  for (const auto& n : info.notes) {
    if (n.program < 0 || n.program >= kVoiceCount) continue;
    const Voice v = static_cast<Voice>(n.program);
    const Tick onset = seconds_to_ticks(n.start);
    const Tick duration = std::max<Tick>(1, seconds_to_ticks(n.end) - onset);
    arr.line(v).push_back({onset, duration, n.pitch, v});
  }
  for (Voice v : {Voice::Soprano, Voice::Alto, Voice::Tenor, Voice::Bass}) {
    auto& line = arr.line(v);
    std::stable_sort(line.begin(), line.end(),
                     [](const NoteEvent& a, const NoteEvent& b) { return a.onset < b.onset; });
  }
  return arr;
}

Arrangement import_midi(const std::filesystem::path& path) { return arrangement_from_midi(read_midi(path)); }

}  // namespace harmonizer
