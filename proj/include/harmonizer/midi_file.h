/**
 * @file midi_file.h
 * @brief Minimal Standard MIDI File reader/writer.
 *
 * The writer emits format 1, PPQ 480, 120 BPM, one track per SATB voice with
 * program p on channel p (Soprano = 0 ... Bass = 3). The reader handles
 * formats 0/1, running status, sysex/meta events and tempo changes.
 */

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "harmonizer/arrangement.h"

namespace harmonizer {

inline constexpr int kExportPpq = 480;
inline constexpr double kExportBpm = 120.0;

struct MidiNote {
  double start = 0.0;  ///< seconds
  double end = 0.0;    ///< seconds
  int pitch = 0;
  int velocity = 0;
  int channel = 0;
  int program = 0;  ///< program active on the channel at note-on
  int track = 0;
};

struct MidiFileInfo {
  int format = 1;
  int ppq = kExportPpq;
  int track_count = 0;
  std::vector<int> programs_per_track;  ///< first program change seen on each track, -1 if none
  std::vector<std::size_t> notes_per_track;
  std::vector<MidiNote> notes;  ///< sorted by (start, track, pitch)
};

/// Throws FormatError on malformed data.
MidiFileInfo parse_midi(std::span<const unsigned char> bytes);
/// Throws IoError when unreadable.
MidiFileInfo read_midi(const std::filesystem::path& path);

std::vector<unsigned char> encode_arrangement_midi(const Arrangement& arr);
/// Throws IoError when the path cannot be written.
void export_midi(const Arrangement& arr, const std::filesystem::path& path);

/// Rebuilds an Arrangement from programs 0-3, quantizing to the 10 ms grid.
Arrangement import_midi(const std::filesystem::path& path);
Arrangement arrangement_from_midi(const MidiFileInfo& info);

}  // namespace harmonizer
