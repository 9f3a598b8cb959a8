/**
 * @file tokenizer.h
 * @brief Anticipatory interleaving of melody controls and harmony events.
 *
 * Every note becomes a (time, duration, note) triplet on the 10 ms tick grid.
 * Melody notes are controls; harmony notes are events. A control at time s is
 * placed after every event with onset < s - delta and before the first event
 * with onset >= s - delta, so the model sees each melody note delta seconds
 * ahead of the harmony it conditions. When s - delta coincides with an event
 * onset, the control goes first.
 */

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "harmonizer/note_event.h"

namespace harmonizer {

inline constexpr double kDefaultDeltaSeconds = 5.0;
inline constexpr std::int64_t kMaxTimeTick = (std::int64_t{1} << 20) - 1;
inline constexpr std::int64_t kMaxDurationTick = 1000;

enum class TokenKind : std::uint8_t {
  Time = 0,
  Duration = 1,
  Note = 2,
  ControlTime = 3,
  ControlDuration = 4,
  ControlNote = 5,
  Separator = 6,
};

struct Token {
  TokenKind kind = TokenKind::Separator;
  std::int64_t value = 0;

  friend bool operator==(const Token&, const Token&) = default;
};

inline constexpr int note_token_value(Voice v, int pitch) { return voice_index(v) * 128 + pitch; }

struct TokenSequence {
  std::vector<Token> tokens;
  double delta = kDefaultDeltaSeconds;

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

struct DecodedStream {
  NoteSequence melody;
  NoteSequence harmony;
};

/// Event order used by the stream: onset, then voice, then pitch, duration.
void canonical_sort(NoteSequence& events);

Tick delta_ticks(double delta_seconds);

/// Incremental writer shared by encode and the decoding loop of the harmony
/// engine. Controls are queued up front; each event pushes out the controls
/// whose anticipation threshold it has reached.
class AnticipatoryWriter {
 public:
  /// Throws std::invalid_argument if delta <= 0 or a control is invalid.
  AnticipatoryWriter(std::span<const NoteEvent> controls, double delta);

  /// Emits pending controls due before an event at `onset`, then TIME and DUR.
  void begin_event(Tick onset, Tick duration);
  /// Completes the event started by begin_event.
  void finish_event(Voice voice, int pitch);
  /// Emits all remaining controls and returns the stream.
  TokenSequence finish() &&;

  const std::vector<Token>& tokens() const { return seq_.tokens; }

 private:
  void flush_controls_before(Tick onset);

  TokenSequence seq_;
  NoteSequence controls_;
  std::size_t next_control_ = 0;
  Tick delta_ticks_ = 0;
  bool in_event_ = false;
};

/// Throws std::invalid_argument for out-of-range ticks/pitches, a melody note
/// outside voice 0, or a harmony note in voice 0.
TokenSequence encode(std::span<const NoteEvent> melody, std::span<const NoteEvent> harmony,
                     double delta = kDefaultDeltaSeconds);

/// Throws FormatError("malformed triplet ...") for broken grouping or an
/// event NOTE token in voice 0.
DecodedStream decode(const TokenSequence& ts);

/// Checks the anticipation placement rule on a well-formed stream.
bool satisfies_anticipation(const TokenSequence& ts);

/// Versioned JSON dump: {"format":"harmonizer-tokens","version":1,"delta":..,
/// "tokens":[[kind,value],...]}.
std::string to_json(const TokenSequence& ts);
TokenSequence from_json(const std::string& text);
void write_tokens(const TokenSequence& ts, const std::filesystem::path& path);

}  // namespace harmonizer
