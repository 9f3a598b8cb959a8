/**
 * @file pitch_tracker.h
 * @brief YIN f0 tracking on a 10 ms grid and segmentation into note events.
 */

#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "harmonizer/audio_io.h"
#include "harmonizer/note_event.h"

namespace harmonizer {

inline constexpr double kMinF0 = 40.0;
inline constexpr double kMaxF0 = 1500.0;

struct F0Frame {
  double f0 = 0.0;           ///< Hz; 0 when unvoiced
  double periodicity = 0.0;  ///< 1 - CMNDF at the chosen lag, in [0, 1]
  bool voiced = false;

  friend bool operator==(const F0Frame&, const F0Frame&) = default;
};

/// Frame k describes the instant k * 10 ms (same index as Tick k).
struct F0Curve {
  std::vector<F0Frame> frames;

  std::size_t size() const { return frames.size(); }
  static constexpr double hop_seconds() { return kTickSeconds; }
  double time_of(std::size_t frame) const { return static_cast<double>(frame) * kTickSeconds; }
  std::size_t voiced_count() const;

  friend bool operator==(const F0Curve&, const F0Curve&) = default;
};

struct TrackerConfig {
  int window = 2048;
  int hop = kHopSamples;
  double yin_threshold = 0.1;
  double min_periodicity = 0.5;
  double min_rms_dbfs = -50.0;
  double min_f0 = kMinF0;
  double max_f0 = kMaxF0;
};

struct SegmenterConfig {
  Tick pitch_change_ticks = 5;  ///< 50 ms of a persistent new pitch opens a note
  Tick gap_ticks = 8;           ///< 80 ms of unvoiced frames closes a note
  Tick min_note_ticks = 6;      ///< notes shorter than 60 ms are dropped
  Tick max_note_ticks = 1000;   ///< longer notes are split (token duration limit)
};

/// One frame per hop, ceil(samples / hop) frames. Requires a non-empty 44.1 kHz
/// buffer (std::invalid_argument otherwise). Silence yields all-unvoiced frames.
F0Curve extract_f0(const AudioBuffer& audio, const TrackerConfig& cfg = {});

/// Soprano note events. Pitch is the median quantized MIDI note over the
/// note's voiced frames. An all-unvoiced curve gives an empty sequence.
NoteSequence transcribe(const F0Curve& f0, const SegmenterConfig& cfg = {});

/// 69 + 12 log2(f / 440). Throws std::domain_error for f <= 0.
double hz_to_midi(double hz);

/// CSV with header "time,f0,periodicity"; unvoiced frames report f0 = 0.
void write_f0_csv(const F0Curve& curve, std::ostream& out);
void write_f0_csv(const F0Curve& curve, const std::filesystem::path& path);

}  // namespace harmonizer
