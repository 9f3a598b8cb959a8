#include "harmonizer/harmony_engine.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace harmonizer {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void validate_melody(std::span<const NoteEvent> melody) {
  if (melody.empty()) throw std::invalid_argument("harmonize: empty melody");
  for (const auto& n : melody) {
    if (n.voice != Voice::Soprano) throw std::invalid_argument("harmonize: melody must be voice 0");
    if (n.pitch < 0 || n.pitch > 127) throw std::invalid_argument("harmonize: melody pitch out of range");
  }
  if (!is_well_formed_line(melody)) {
    throw std::invalid_argument("harmonize: melody must be sorted and non-overlapping");
  }
}

void validate_config(const SamplerConfig& cfg) {
  if (!(cfg.temperature >= 0.0) || !std::isfinite(cfg.temperature)) {
    throw std::invalid_argument("sampler: temperature must be positive (0 for greedy)");
  }
  if (!(cfg.top_p > 0.0 && cfg.top_p <= 1.0)) throw std::invalid_argument("sampler: top_p must lie in (0, 1]");
}

}  // namespace

std::optional<int> ScoringContext::pitch_at(Voice v, std::size_t index) const {
  if (v == Voice::Soprano) {
    if (index < melody.size()) return melody[index].pitch;
    return std::nullopt;
  }
  const auto& line = partial->line(v);
  if (index < line.size()) return line[index].pitch;
  return std::nullopt;
}

std::vector<int> candidate_pitches(Voice voice, int ceiling) {
  const VoiceRange r = range_of(voice);
  const int top = std::min(r.high, std::max(ceiling, r.low));
  std::vector<int> out(static_cast<std::size_t>(top - r.low + 1));
  std::iota(out.begin(), out.end(), r.low);
  return out;
}

std::vector<double> sampling_distribution(std::span<const double> logits, double temperature, double top_p) {
  std::vector<double> probs(logits.size(), 0.0);
  double max_logit = kNegInf;
  for (double l : logits) max_logit = std::max(max_logit, l);
  if (max_logit == kNegInf) throw std::invalid_argument("sampling_distribution: every token is masked");

  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (logits[i] == kNegInf) continue;
    probs[i] = std::exp((logits[i] - max_logit) / temperature);
    total += probs[i];
  }
  for (double& p : probs) p /= total;

  if (top_p < 1.0) {
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] > 0.0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
    double cum = 0.0;
    std::size_t keep = 0;
    while (keep < order.size()) {
      cum += probs[order[keep++]];
      if (cum >= top_p) break;
    }
    for (std::size_t k = keep; k < order.size(); ++k) probs[order[k]] = 0.0;
    double kept = 0.0;
    for (double p : probs) kept += p;
    for (double& p : probs) p /= kept;
  }
  return probs;
}

Arrangement harmonize(std::span<const NoteEvent> melody, NoteScorer& backend, const SamplerConfig& cfg,
                      double delta, DecodeTrace* trace) {
  validate_melody(melody);
  validate_config(cfg);

  const Key key = key_estimate(melody);
  Arrangement partial;
  partial.soprano.assign(melody.begin(), melody.end());
  AnticipatoryWriter writer(melody, delta);
  SeededSampler rng(cfg.seed);
  std::vector<double> logits(kNoteVocabulary);

  for (std::size_t step = 0; step < melody.size(); ++step) {
    const NoteEvent& control = melody[step];
    int ceiling = control.pitch;
    for (Voice voice : kHarmonyVoices) {
      // Time and duration are copied from the control, never sampled.
      writer.begin_event(control.onset, control.duration);

      const std::vector<int> candidates = candidate_pitches(voice, ceiling);
      ScoringContext ctx{melody, step, voice, &partial, key, writer.tokens()};
      const std::vector<double> scores = backend.score(ctx, candidates);
      if (scores.size() != candidates.size()) {
        throw std::runtime_error("backend '" + backend.name() + "' returned " + std::to_string(scores.size()) +
                                 " scores for " + std::to_string(candidates.size()) + " candidates");
      }

      std::fill(logits.begin(), logits.end(), kNegInf);
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (!std::isfinite(scores[i])) {
          throw std::runtime_error("backend '" + backend.name() + "' returned a non-finite score");
        }
        logits[static_cast<std::size_t>(note_token_value(voice, candidates[i]))] = scores[i];
      }

      int chosen_token = -1;
      std::vector<double> probs;
      if (cfg.is_greedy()) {
        for (int token = 0; token < kNoteVocabulary; ++token) {
          if (logits[token] == kNegInf) continue;
          if (chosen_token < 0 || logits[token] > logits[chosen_token]) chosen_token = token;
        }
        probs.assign(kNoteVocabulary, 0.0);
        probs[static_cast<std::size_t>(chosen_token)] = 1.0;
      } else {
        probs = sampling_distribution(logits, cfg.temperature, cfg.top_p);
        const double u = rng.uniform();
        double cum = 0.0;
        for (int token = 0; token < kNoteVocabulary; ++token) {
          if (probs[token] <= 0.0) continue;
          chosen_token = token;
          cum += probs[token];
          if (u < cum) break;
        }
      }

      const int pitch = chosen_token % 128;
      writer.finish_event(voice, pitch);
      partial.line(voice).push_back({control.onset, control.duration, pitch, voice});
      ceiling = pitch;

      if (trace) trace->steps.push_back({step, voice, candidates, std::move(probs), pitch});
    }
  }

  // The arrangement is read back from the token stream the decoder wrote.
  TokenSequence stream = std::move(writer).finish();
  DecodedStream decoded = decode(stream);
  Arrangement out;
  out.soprano = std::move(decoded.melody);
  for (const auto& e : decoded.harmony) out.line(e.voice).push_back(e);
  if (trace) trace->tokens = std::move(stream);
  return out;
}

}  // namespace harmonizer
