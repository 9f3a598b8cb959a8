// Synthetic signals, random melodies and small corpora shared by the unit
// tests and the acceptance runner.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <vector>

#include "harmonizer/arrangement.h"
#include "harmonizer/audio_io.h"
#include "harmonizer/pitch_tracker.h"

namespace fixtures {

using harmonizer::AudioBuffer;
using harmonizer::NoteSequence;

inline constexpr int kFs = harmonizer::kSampleRate;

AudioBuffer sine(double hz, double seconds, double amplitude = 0.5);

/// Phase-continuous sine melody, one MIDI pitch per `note_seconds`.
AudioBuffer sine_melody(std::span<const int> pitches, double note_seconds, double amplitude = 0.5);

/// C4 D4 E4 F4 G4 A4 B4 C5, 0.4 s each.
inline constexpr int kScalePitches[] = {60, 62, 64, 65, 67, 69, 71, 72};
AudioBuffer scale_fixture();

/// Held tone with sinusoidal vibrato of +/- `cents` at `rate_hz`.
AudioBuffer vibrato_tone(double hz, double seconds, double cents, double rate_hz = 5.5);

/// Linear frequency glide.
AudioBuffer glide(double from_hz, double to_hz, double seconds);

/// Harmonic series shaped by three /a/-like formant resonances.
AudioBuffer vowel(double hz, double seconds, double peak = 0.5);

/// Sung-melody stand-in: vowel timbre, 0.5 s notes with 40 ms breaths,
/// a few semitone steps around A3-A4.
AudioBuffer ten_second_fixture();

/// Random soprano line: contiguous or gapped notes with durations in
/// [min_ticks, max_ticks] and pitches in [low, high].
NoteSequence random_melody(std::mt19937_64& rng, std::size_t notes, int low = 60, int high = 81,
                           harmonizer::Tick min_ticks = 6, harmonizer::Tick max_ticks = 200);

/// Random harmony events in voices 1-3 whose onsets fall within [0, span].
NoteSequence random_harmony(std::mt19937_64& rng, std::size_t notes, harmonizer::Tick span);

/// Writes `count` four-voice chorales harmonized by the rulebook at a random
/// seed to `dir` as SMF files.
void write_toy_corpus(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed);

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<unsigned char> read_bytes(const std::filesystem::path& path);

/// Median of voiced f0 values.
double median_voiced_f0(const harmonizer::F0Curve& curve);

inline double cents(double hz, double ref_hz) { return 1200.0 * std::log2(hz / ref_hz); }

}  // namespace fixtures
