/**
 * @file f0_transform.h
 * @brief Piecewise semitone shift of the input f0 contour per harmony voice.
 *
 * With melody onsets t_1 < ... < t_N and offsets h_i = harmony - melody pitch,
 * a voiced input frame at time t in [t_i, t_{i+1}) maps to f * 2^(h_i / 12);
 * the last segment runs to the end of the curve. Frames before t_1 are
 * unvoiced in the output.
 */

#pragma once

#include <cmath>
#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "harmonizer/arrangement.h"
#include "harmonizer/pitch_tracker.h"

namespace harmonizer {

inline constexpr int kMaxShiftSemitones = 48;
inline constexpr double kMinShiftedHz = 20.0;
inline constexpr double kMaxShiftedHz = 4000.0;

struct ShiftSegment {
  Tick onset = 0;
  int semitones = 0;

  friend bool operator==(const ShiftSegment&, const ShiftSegment&) = default;
};

/// Segments with strictly increasing onsets and |semitones| <= 48.
struct ShiftPlan {
  std::vector<ShiftSegment> segments;

  bool empty() const { return segments.empty(); }
  /// Index of the segment covering `tick`, or -1 before the first onset.
  long segment_at(Tick tick) const;
};

struct ShiftedCurve {
  F0Curve curve;
  std::size_t out_of_range_frames = 0;  ///< voiced frames dropped outside [20, 4000] Hz
};

/// Throws std::invalid_argument on length mismatch, non-increasing onsets or
/// an offset beyond +/-48 semitones.
ShiftPlan build_shift_plan(std::span<const NoteEvent> melody, std::span<const NoteEvent> harmony_voice);

/// An empty plan yields an all-unvoiced curve of the same length.
ShiftedCurve shift_f0(const F0Curve& f0_in, const ShiftPlan& plan);

/// Shifted curves for Alto, Tenor, Bass (in that order), computed
/// concurrently when `parallel` is set.
std::array<ShiftedCurve, 3> shift_harmony_voices(const Arrangement& arr, const F0Curve& f0_in, bool parallel = true);

/// 440 * 2^((m - 69) / 12).
double midi_to_hz(double midi);

/// Frequency ratio of a shift by `semitones`.
inline double semitone_ratio(int semitones) { return std::exp2(semitones / 12.0); }

}  // namespace harmonizer
