#include "harmonizer/tokenizer.h"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

#include "harmonizer/errors.h"

namespace harmonizer {
namespace {

void check_note(const NoteEvent& n, const char* what) {
  if (n.onset < 0 || n.onset > kMaxTimeTick) {
    throw std::invalid_argument(std::string(what) + ": onset tick out of range");
  }
  if (n.duration < 1 || n.duration > kMaxDurationTick) {
    throw std::invalid_argument(std::string(what) + ": duration tick out of range");
  }
  if (n.pitch < 0 || n.pitch > 127) throw std::invalid_argument(std::string(what) + ": pitch out of range");
}

bool is_control(TokenKind k) {
  return k == TokenKind::ControlTime || k == TokenKind::ControlDuration || k == TokenKind::ControlNote;
}

}  // namespace

void canonical_sort(NoteSequence& events) {
  std::stable_sort(events.begin(), events.end(), [](const NoteEvent& a, const NoteEvent& b) {
    return std::tuple(a.onset, voice_index(a.voice), a.pitch, a.duration) <
           std::tuple(b.onset, voice_index(b.voice), b.pitch, b.duration);
  });
}

Tick delta_ticks(double delta_seconds) { return seconds_to_ticks(delta_seconds); }

AnticipatoryWriter::AnticipatoryWriter(std::span<const NoteEvent> controls, double delta)
    : controls_(controls.begin(), controls.end()) {
  if (!(delta > 0.0)) throw std::invalid_argument("anticipation interval must be positive");
  seq_.delta = delta;
  delta_ticks_ = delta_ticks(delta);
  for (const auto& c : controls_) {
    check_note(c, "control");
    if (c.voice != Voice::Soprano) throw std::invalid_argument("control notes must be voice 0");
  }
  canonical_sort(controls_);
}

void AnticipatoryWriter::flush_controls_before(Tick onset) {
  while (next_control_ < controls_.size() &&
         onset >= controls_[next_control_].onset - delta_ticks_) {
    const auto& c = controls_[next_control_++];
    seq_.tokens.push_back({TokenKind::ControlTime, c.onset});
    seq_.tokens.push_back({TokenKind::ControlDuration, c.duration});
    seq_.tokens.push_back({TokenKind::ControlNote, note_token_value(Voice::Soprano, c.pitch)});
  }
}

void AnticipatoryWriter::begin_event(Tick onset, Tick duration) {
  if (in_event_) throw std::logic_error("begin_event called twice");
  check_note({onset, duration, 0, Voice::Alto}, "event");
  flush_controls_before(onset);
  seq_.tokens.push_back({TokenKind::Time, onset});
  seq_.tokens.push_back({TokenKind::Duration, duration});
  in_event_ = true;
}

void AnticipatoryWriter::finish_event(Voice voice, int pitch) {
  if (!in_event_) throw std::logic_error("finish_event without begin_event");
  if (voice == Voice::Soprano) throw std::invalid_argument("event notes cannot be voice 0");
  if (pitch < 0 || pitch > 127) throw std::invalid_argument("event: pitch out of range");
  seq_.tokens.push_back({TokenKind::Note, note_token_value(voice, pitch)});
  in_event_ = false;
}

TokenSequence AnticipatoryWriter::finish() && {
  if (in_event_) throw std::logic_error("unfinished event");
  flush_controls_before(kMaxTimeTick + delta_ticks_ + 1);
  return std::move(seq_);
}

TokenSequence encode(std::span<const NoteEvent> melody, std::span<const NoteEvent> harmony,
                     double delta) {
  NoteSequence events(harmony.begin(), harmony.end());
  for (const auto& e : events) {
    check_note(e, "event");
    if (e.voice == Voice::Soprano) throw std::invalid_argument("harmony notes cannot be voice 0");
  }
  canonical_sort(events);

  AnticipatoryWriter writer(melody, delta);
  for (const auto& e : events) {
    writer.begin_event(e.onset, e.duration);
    writer.finish_event(e.voice, e.pitch);
  }
  return std::move(writer).finish();
}

DecodedStream decode(const TokenSequence& ts) {
  DecodedStream out;
  const auto& t = ts.tokens;
  std::size_t i = 0;
  while (i < t.size()) {
    if (t[i].kind == TokenKind::Separator) {
      ++i;
      continue;
    }
    if (i + 3 > t.size()) throw FormatError("malformed triplet: dangling tail");
    const Token& a = t[i];
    const Token& b = t[i + 1];
    const Token& c = t[i + 2];
    const bool control = is_control(a.kind);
    const TokenKind want_time = control ? TokenKind::ControlTime : TokenKind::Time;
    const TokenKind want_dur = control ? TokenKind::ControlDuration : TokenKind::Duration;
    const TokenKind want_note = control ? TokenKind::ControlNote : TokenKind::Note;
    if (a.kind != want_time || b.kind != want_dur || c.kind != want_note) {
      throw FormatError("malformed triplet at token " + std::to_string(i));
    }
    if (a.value < 0 || a.value > kMaxTimeTick || b.value < 1 || b.value > kMaxDurationTick ||
        c.value < 0 || c.value >= 4 * 128) {
      throw FormatError("malformed triplet: value out of range at token " + std::to_string(i));
    }
    NoteEvent n{a.value, b.value, static_cast<int>(c.value % 128), static_cast<Voice>(c.value / 128)};
    if (control) {
      if (n.voice != Voice::Soprano) throw FormatError("control note outside voice 0");
      out.melody.push_back(n);
    } else {
      if (n.voice == Voice::Soprano) throw FormatError("event NOTE token in voice 0");
      out.harmony.push_back(n);
    }
    i += 3;
  }
  return out;
}

bool satisfies_anticipation(const TokenSequence& ts) {
  struct Item {
    bool control;
    NoteEvent note;
  };
  std::vector<Item> items;
  {
    const auto& t = ts.tokens;
    for (std::size_t i = 0; i + 2 < t.size();) {
      if (t[i].kind == TokenKind::Separator) {
        ++i;
        continue;
      }
      items.push_back({is_control(t[i].kind),
                       {t[i].value, t[i + 1].value, static_cast<int>(t[i + 2].value % 128),
                        static_cast<Voice>(t[i + 2].value / 128)}});
      i += 3;
    }
  }
  const Tick dt = delta_ticks(ts.delta);
  for (std::size_t p = 0; p < items.size(); ++p) {
    if (!items[p].control) continue;
    const Tick threshold = items[p].note.onset - dt;
    for (std::size_t q = 0; q < items.size(); ++q) {
      if (items[q].control) continue;
      if (q < p && items[q].note.onset >= threshold) return false;
      if (q > p && items[q].note.onset < threshold) return false;
    }
  }
  return true;
}

std::string to_json(const TokenSequence& ts) {
  nlohmann::ordered_json j;
  j["format"] = "harmonizer-tokens";
  j["version"] = 1;
  j["delta"] = ts.delta;
  auto arr = nlohmann::json::array();
  for (const auto& tok : ts.tokens) arr.push_back({static_cast<int>(tok.kind), tok.value});
  j["tokens"] = std::move(arr);
  return j.dump();
}

TokenSequence from_json(const std::string& text) {
  TokenSequence ts;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != "harmonizer-tokens" || j.at("version") != 1) {
      throw FormatError("unsupported token dump version");
    }
    ts.delta = j.at("delta").get<double>();
    for (const auto& pair : j.at("tokens")) {
      int kind = pair.at(0).get<int>();
      if (kind < 0 || kind > static_cast<int>(TokenKind::Separator)) throw FormatError("bad token kind");
      ts.tokens.push_back({static_cast<TokenKind>(kind), pair.at(1).get<std::int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("token dump: ") + e.what());
  }
  return ts;
}

void write_tokens(const TokenSequence& ts, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json(ts) << '\n';
}

}  // namespace harmonizer
