/**
 * @file note_event.h
 * @brief Time base and note representation shared by every pipeline stage.
 *
 * All symbolic times live on a 10 ms tick grid. The grid is the same as the
 * f0 frame hop, so tick k and f0 frame k refer to the same instant.
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace harmonizer {

/// Internal sample rate of every AudioBuffer handed between stages.
inline constexpr int kSampleRate = 44100;

/// One tick == one f0 frame == 10 ms == 441 samples at kSampleRate.
inline constexpr double kTickSeconds = 0.010;
inline constexpr int kHopSamples = 441;

using Tick = std::int64_t;

/// Nearest tick; quantization error is at most half a tick (5 ms).
inline Tick seconds_to_ticks(double seconds) {
  return static_cast<Tick>(std::llround(seconds / kTickSeconds));
}

inline double ticks_to_seconds(Tick ticks) {
  return static_cast<double>(ticks) * kTickSeconds;
}

enum class Voice : std::uint8_t { Soprano = 0, Alto = 1, Tenor = 2, Bass = 3 };

inline constexpr int kVoiceCount = 4;

inline constexpr int voice_index(Voice v) { return static_cast<int>(v); }

std::string_view voice_name(Voice v);

/// A note on the tick grid. (onset, duration, pitch) is the time/duration/note
/// triplet; voice doubles as the MIDI program number (0..3).
struct NoteEvent {
  Tick onset = 0;
  Tick duration = 1;
  int pitch = 60;
  Voice voice = Voice::Soprano;

  Tick end() const { return onset + duration; }
  double onset_seconds() const { return ticks_to_seconds(onset); }
  double duration_seconds() const { return ticks_to_seconds(duration); }

  friend bool operator==(const NoteEvent&, const NoteEvent&) = default;
};

using NoteSequence = std::vector<NoteEvent>;

/// True when every event has duration > 0, onset >= 0, and events are sorted
/// by onset without overlapping. Callers pass one voice at a time.
bool is_well_formed_line(std::span<const NoteEvent> line);

}  // namespace harmonizer
