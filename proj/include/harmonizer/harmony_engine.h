/**
 * @file harmony_engine.h
 * @brief Constrained autoregressive decoding of Alto/Tenor/Bass under a melody.
 *
 * Decoding walks the melody note by note. For each note and each harmony voice
 * (Alto, Tenor, Bass) the engine writes the event's TIME and DUR tokens itself,
 * copying the melody control's values, then asks the backend to score the
 * voice's candidate NOTE tokens. Every other NOTE token in the vocabulary gets
 * a -inf logit, so only the masked candidate set can ever be sampled.
 */

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "harmonizer/arrangement.h"
#include "harmonizer/key_estimate.h"
#include "harmonizer/tokenizer.h"

namespace harmonizer {

/// Size of the NOTE token vocabulary (4 voices x 128 pitches).
inline constexpr int kNoteVocabulary = 4 * 128;

/// Read-only view handed to a backend for one NOTE decision.
struct ScoringContext {
  std::span<const NoteEvent> melody;
  std::size_t step = 0;        ///< index of the melody note being harmonized
  Voice voice = Voice::Alto;   ///< voice being decided
  const Arrangement* partial;  ///< lines decided so far (upper voices include `step`)
  Key key;
  std::span<const Token> tokens;  ///< stream so far, ending with the forced TIME, DUR

  /// Pitch of `v` at melody index `index`, if already decided.
  std::optional<int> pitch_at(Voice v, std::size_t index) const;
};

/// Backend producing one logit per candidate pitch, same order. Backends never
/// normalize; the engine applies the softmax.
class NoteScorer {
 public:
  virtual ~NoteScorer() = default;
  virtual std::string name() const = 0;
  virtual bool deterministic() const { return true; }
  virtual std::vector<double> score(const ScoringContext& ctx, std::span<const int> candidates) = 0;
};

/// All-zero logits.
class UniformScorer final : public NoteScorer {
 public:
  std::string name() const override { return "uniform"; }
  std::vector<double> score(const ScoringContext&, std::span<const int> candidates) override {
    return std::vector<double>(candidates.size(), 0.0);
  }
};

struct SamplerConfig {
  double temperature = 1.0;  ///< 0 selects greedy (argmax, ties to the lower pitch)
  double top_p = 1.0;        ///< nucleus mass in (0, 1]
  std::uint64_t seed = 0;

  static SamplerConfig greedy() { return {0.0, 1.0, 0}; }
  bool is_greedy() const { return temperature == 0.0; }
};

/// One NOTE decision as seen by the sampler.
struct DecodeStep {
  std::size_t step = 0;
  Voice voice = Voice::Alto;
  std::vector<int> candidates;         ///< unmasked pitches, ascending
  std::vector<double> probabilities;   ///< over all kNoteVocabulary NOTE tokens
  int chosen = 0;                      ///< pitch
};

struct DecodeTrace {
  std::vector<DecodeStep> steps;
  TokenSequence tokens;
};

/// Unmasked pitches for `voice` when the next voice up sits at `ceiling`:
/// the voice's range capped at the ceiling. If the ceiling is below the range
/// bottom, it is raised to the range bottom so the set is never empty.
std::vector<int> candidate_pitches(Voice voice, int ceiling);

/// Throws std::invalid_argument for an empty or malformed melody or an
/// invalid SamplerConfig, std::runtime_error when the backend returns
/// non-finite scores or the wrong number of scores.
Arrangement harmonize(std::span<const NoteEvent> melody, NoteScorer& backend, const SamplerConfig& cfg,
                      double delta = kDefaultDeltaSeconds, DecodeTrace* trace = nullptr);

/// Uniform draws in [0, 1) with 53-bit resolution from mt19937_64, whose
/// output sequence is fixed by the standard.
class SeededSampler {
 public:
  explicit SeededSampler(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Converts masked logits to the sampling distribution: softmax(logit / T)
/// followed by top-p truncation. Masked entries (-inf) come out as exactly 0.
std::vector<double> sampling_distribution(std::span<const double> logits, double temperature, double top_p);

}  // namespace harmonizer
