/**
 * @file scorers.h
 * @brief Built-in NoteScorer backends: a voice-leading rulebook and a
 *        count-based Markov table trained on four-voice MIDI chorales.
 */

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <tuple>

#include "harmonizer/harmony_engine.h"

namespace harmonizer {

/// Pitch classes (relative to C) of the diatonic triad used as the harmonic
/// target for a melody pitch class. Triads are tried in functional order
/// (I, V, IV, vi, ii, iii, vii in major; i, V, iv, VI, ii, III, VII in minor,
/// with V taken from harmonic minor); a chromatic melody pitch falls back to
/// the major triad built on it.
std::array<int, 3> best_triad(const Key& key, int melody_pitch_class);

/// Cost terms of the rulebook (score = -total()).
struct VoiceLeadingCost {
  double motion = 0.0;     ///< |semitones from previous pitch|, or distance to range center on the first note
  double non_chord = 0.0;  ///< 10 when the pitch class is outside best_triad
  double parallels = 0.0;  ///< 3 per parallel fifth/octave with a voice already decided at this step
  double spacing = 0.0;    ///< 2 when more than an octave below the next voice up

  double total() const { return motion + non_chord + parallels + spacing; }
};

/// Parallels: both voices move in the same direction and the interval class
/// (mod 12) is a unison/octave or a fifth before and after.
VoiceLeadingCost rulebook_cost(const ScoringContext& ctx, int candidate);

class RulebookScorer final : public NoteScorer {
 public:
  std::string name() const override { return "rulebook"; }
  std::vector<double> score(const ScoringContext& ctx, std::span<const int> candidates) override;
};

/// Transition counts of (melody pitch class, voice, previous offset) -> offset,
/// where offset = harmony pitch - melody pitch.
class MarkovModel {
 public:
  static constexpr int kMinOffset = -48;
  static constexpr int kMaxOffset = 48;
  static constexpr int kVocabulary = kMaxOffset - kMinOffset + 1;
  /// Previous-offset value for the first note of a phrase.
  static constexpr int kStartOffset = 99;

  using Context = std::tuple<int, int, int>;  // (melody pc, voice, previous offset)

  void add(int melody_pc, Voice voice, int prev_offset, int offset, std::uint64_t n = 1);

  std::uint64_t count(int melody_pc, Voice voice, int prev_offset, int offset) const;
  std::uint64_t total(int melody_pc, Voice voice, int prev_offset) const;
  /// Add-one smoothed probability over the kVocabulary offsets.
  double probability(int melody_pc, Voice voice, int prev_offset, int offset) const;

  std::size_t context_count() const { return counts_.size(); }
  const std::map<Context, std::map<int, std::uint64_t>>& table() const { return counts_; }

  /// Versioned JSON; identical models serialize to identical bytes.
  std::string to_json() const;
  static MarkovModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  /// Throws IoError if missing, FormatError if corrupt.
  static MarkovModel load(const std::filesystem::path& path);

  friend bool operator==(const MarkovModel&, const MarkovModel&) = default;

 private:
  std::map<Context, std::map<int, std::uint64_t>> counts_;
  std::map<Context, std::uint64_t> totals_;
};

/// Counts voice transitions in every *.mid / *.midi file under `corpus_dir`
/// (sorted by name). Voices are read from programs 0-3; each soprano note
/// with all three lower voices sounding at its onset is one chord sample.
/// Throws std::runtime_error when no usable file is found.
MarkovModel train_markov(const std::filesystem::path& corpus_dir);

class MarkovScorer final : public NoteScorer {
 public:
  explicit MarkovScorer(std::shared_ptr<const MarkovModel> model) : model_(std::move(model)) {}
  std::string name() const override { return "markov"; }
  /// log P(offset | melody pc, voice, previous offset).
  std::vector<double> score(const ScoringContext& ctx, std::span<const int> candidates) override;

 private:
  std::shared_ptr<const MarkovModel> model_;
};

}  // namespace harmonizer
