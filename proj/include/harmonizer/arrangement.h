#pragma once

#include <array>

#include "harmonizer/note_event.h"

namespace harmonizer {

struct VoiceRange {
  int low = 0;
  int high = 127;

  bool contains(int pitch) const { return pitch >= low && pitch <= high; }
  double center() const { return 0.5 * (low + high); }
};

/// SATB compass used for masking. Soprano is whatever the singer sang.
inline constexpr VoiceRange kAltoRange{53, 74};   // F3-D5
inline constexpr VoiceRange kTenorRange{48, 67};  // C3-G4
inline constexpr VoiceRange kBassRange{40, 60};   // E2-C4

inline constexpr VoiceRange range_of(Voice v) {
  switch (v) {
    case Voice::Alto:
      return kAltoRange;
    case Voice::Tenor:
      return kTenorRange;
    case Voice::Bass:
      return kBassRange;
    case Voice::Soprano:
      break;
  }
  return {0, 127};
}

inline constexpr std::array<Voice, 3> kHarmonyVoices{Voice::Alto, Voice::Tenor, Voice::Bass};

/// Four index-aligned voice lines. soprano is the input melody.
struct Arrangement {
  NoteSequence soprano;
  NoteSequence alto;
  NoteSequence tenor;
  NoteSequence bass;

  NoteSequence& line(Voice v) {
    switch (v) {
      case Voice::Soprano:
        return soprano;
      case Voice::Alto:
        return alto;
      case Voice::Tenor:
        return tenor;
      case Voice::Bass:
        break;
    }
    return bass;
  }
  const NoteSequence& line(Voice v) const { return const_cast<Arrangement*>(this)->line(v); }

  std::size_t size() const { return soprano.size(); }

  friend bool operator==(const Arrangement&, const Arrangement&) = default;
};

}  // namespace harmonizer
