#pragma once

#include <array>
#include <span>

#include "harmonizer/note_event.h"

namespace harmonizer {

enum class Mode : std::uint8_t { Major, Minor };

struct Key {
  int tonic = 0;  ///< pitch class, C = 0
  Mode mode = Mode::Major;

  friend bool operator==(const Key&, const Key&) = default;
};

/// Krumhansl-Kessler probe-tone profiles, index 0 = tonic.
inline constexpr std::array<double, 12> kMajorProfile{6.35, 2.23, 3.48, 2.33, 4.38, 4.09,
                                                      2.52, 5.19, 2.39, 3.66, 2.29, 2.88};
inline constexpr std::array<double, 12> kMinorProfile{6.33, 2.68, 3.52, 5.38, 2.60, 3.53,
                                                      2.54, 4.75, 3.98, 2.69, 3.34, 3.17};

/// Duration-weighted pitch-class histogram.
std::array<double, 12> pitch_class_histogram(std::span<const NoteEvent> melody);

/// Krumhansl-Schmuckler: the key whose rotated profile has the highest
/// Pearson correlation with the histogram. Ties go to the lower tonic, then
/// major. A flat histogram correlates 0 with every key and yields C major.
Key key_estimate(std::span<const NoteEvent> melody);

}  // namespace harmonizer
