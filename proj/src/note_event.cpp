#include "harmonizer/note_event.h"

namespace harmonizer {

std::string_view voice_name(Voice v) {
  switch (v) {
    case Voice::Soprano:
      return "soprano";
    case Voice::Alto:
      return "alto";
    case Voice::Tenor:
      return "tenor";
    case Voice::Bass:
      return "bass";
  }
  return "unknown";
}

bool is_well_formed_line(std::span<const NoteEvent> line) {
  Tick prev_end = 0;
  for (const auto& e : line) {
    if (e.duration <= 0 || e.onset < 0) return false;
    if (e.onset < prev_end) return false;
    prev_end = e.end();
  }
  return true;
}

}  // namespace harmonizer
