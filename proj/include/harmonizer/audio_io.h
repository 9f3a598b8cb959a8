/**
 * @file audio_io.h
 * @brief WAV reading/writing, downmix/resample to the internal format, mixing.
 */

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "harmonizer/note_event.h"

namespace harmonizer {

/// Mono audio. Samples are finite and within [-1, 1].
struct AudioBuffer {
  std::vector<float> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }

  friend bool operator==(const AudioBuffer&, const AudioBuffer&) = default;
};

enum class BitDepth { Pcm16, Float32 };

/// Reads PCM16/PCM24/PCM32/float32 WAV (including WAVE_FORMAT_EXTENSIBLE),
/// averages channels to mono and resamples to 44100 Hz.
/// Throws IoError for unreadable files and FormatError for unsupported
/// encodings or zero-length audio.
AudioBuffer load_audio(const std::filesystem::path& path);

/// Throws std::invalid_argument for an empty buffer, IoError when the path
/// cannot be written.
void save_audio(const AudioBuffer& buffer, const std::filesystem::path& path,
                BitDepth depth = BitDepth::Float32);

/// In-memory WAV encoding used by save_audio (exposed for byte-level checks).
std::vector<unsigned char> encode_wav(const AudioBuffer& buffer, BitDepth depth);
AudioBuffer decode_wav(std::span<const unsigned char> bytes);

/// Weighted sample-wise sum padded to the longest input. If the raw peak
/// exceeds 1.0 the result is scaled so that its peak is 0.99.
/// Throws std::invalid_argument on mismatched rates or gain count.
AudioBuffer mix(std::span<const AudioBuffer> buffers, std::span<const double> gains);

/// Windowed-sinc (Kaiser) sample-rate conversion. Output length is
/// round(n * to_rate / from_rate). Same rate returns the input unchanged.
std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate);

}  // namespace harmonizer
