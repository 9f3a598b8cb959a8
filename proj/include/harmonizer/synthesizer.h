/**
 * @file synthesizer.h
 * @brief Pitch-conditioned resynthesis of harmony voices from the input vocal.
 *
 * Each voice is rendered by TD-PSOLA: two-period Hann grains are cut at
 * pitch marks of the source and overlap-added at the spacing of the target
 * f0, followed by a cepstral envelope correction that pulls each output
 * frame's smoothed spectrum back to the source's. Timbre comes straight from
 * the source signal.
 */

#pragma once

#include <array>
#include <cstddef>

#include "harmonizer/arrangement.h"
#include "harmonizer/audio_io.h"
#include "harmonizer/f0_transform.h"
#include "harmonizer/pitch_tracker.h"

namespace harmonizer {

struct SynthConfig {
  bool envelope_correction = true;
  /// Copy unvoiced source frames (consonants) at consonant_gain when a
  /// target-voiced frame lies within consonant_reach_ticks.
  bool consonant_passthrough = true;
  double consonant_gain = 0.5;  // -6 dB
  Tick consonant_reach_ticks = 5;
  double consonant_min_rms_dbfs = -50.0;
  double gate_ramp_seconds = 0.005;
  bool parallel = true;  ///< render_arrangement: one thread per harmony voice
};

struct VoiceRender {
  Voice voice = Voice::Alto;
  AudioBuffer audio;
  F0Curve target;
};

/// Output has exactly input.size() samples. Frames whose target is unvoiced
/// are silent (apart from consonant passthrough). Throws
/// std::invalid_argument when either curve is off the input's frame grid.
VoiceRender synthesize_voice(const AudioBuffer& input, const F0Curve& f0_in, const F0Curve& f0_out,
                             Voice voice = Voice::Alto, const SynthConfig& cfg = {});

struct RenderedArrangement {
  std::array<AudioBuffer, kVoiceCount> stems;  ///< stem 0 is the unmodified input
  AudioBuffer mixdown;                         ///< unity-gain mix of the four stems
  std::array<F0Curve, kVoiceCount> targets;    ///< targets[0] is f0_in
  std::array<std::size_t, kVoiceCount> out_of_range_frames{};
};

/// Renders the three harmony stems (Alto, Tenor, Bass order) against
/// precomputed target curves.
std::array<AudioBuffer, 3> render_harmony_stems(const AudioBuffer& input, const F0Curve& f0_in,
                                                const std::array<ShiftedCurve, 3>& targets, const SynthConfig& cfg = {});

/// build_shift_plan -> shift_f0 -> synthesize_voice for Alto/Tenor/Bass, then
/// mix. An arrangement with an empty melody renders silent harmony stems.
RenderedArrangement render_arrangement(const AudioBuffer& input, const Arrangement& arr, const F0Curve& f0_in,
                                       const SynthConfig& cfg = {});

/// Expected frame count for a buffer on the 10 ms grid.
inline std::size_t frame_count_for(std::size_t samples) {
  return (samples + kHopSamples - 1) / kHopSamples;
}

}  // namespace harmonizer
