#include <algorithm>
#include <cmath>

#include "harmonizer/scorers.h"

namespace harmonizer {
namespace {

using Triad = std::array<int, 3>;

// Relative to the tonic, in functional priority order.
constexpr std::array<Triad, 7> kMajorTriads{{
    {0, 4, 7}, {7, 11, 2}, {5, 9, 0}, {9, 0, 4}, {2, 5, 9}, {4, 7, 11}, {11, 2, 5},
}};
constexpr std::array<Triad, 7> kMinorTriads{{
    {0, 3, 7}, {7, 11, 2}, {5, 8, 0}, {8, 0, 3}, {2, 5, 8}, {3, 7, 10}, {10, 2, 5},
}};

int sign(int x) { return (x > 0) - (x < 0); }

Voice upper_neighbour(Voice v) { return static_cast<Voice>(voice_index(v) - 1); }

}  // namespace

std::array<int, 3> best_triad(const Key& key, int melody_pitch_class) {
  const auto& table = key.mode == Mode::Major ? kMajorTriads : kMinorTriads;
  for (const Triad& rel : table) {
    Triad abs{};
    for (int i = 0; i < 3; ++i) abs[i] = (rel[i] + key.tonic) % 12;
    if (std::find(abs.begin(), abs.end(), melody_pitch_class) != abs.end()) return abs;
  }
  return {melody_pitch_class, (melody_pitch_class + 4) % 12, (melody_pitch_class + 7) % 12};
}

VoiceLeadingCost rulebook_cost(const ScoringContext& ctx, int candidate) {
  VoiceLeadingCost cost;
  const std::size_t i = ctx.step;
  const int melody_pitch = ctx.melody[i].pitch;

  const auto prev = i > 0 ? ctx.pitch_at(ctx.voice, i - 1) : std::nullopt;
  cost.motion = prev ? std::abs(candidate - *prev) : std::abs(candidate - range_of(ctx.voice).center());

  const auto triad = best_triad(ctx.key, melody_pitch % 12);
  if (std::find(triad.begin(), triad.end(), candidate % 12) == triad.end()) cost.non_chord = 10.0;

  if (prev) {
    for (int u = 0; u < voice_index(ctx.voice); ++u) {
      const Voice other = static_cast<Voice>(u);
      const auto other_now = ctx.pitch_at(other, i);
      const auto other_prev = ctx.pitch_at(other, i - 1);
      if (!other_now || !other_prev) continue;
      const int own_motion = candidate - *prev;
      const int other_motion = *other_now - *other_prev;
      if (own_motion == 0 || sign(own_motion) != sign(other_motion)) continue;
      const int before = std::abs(*other_prev - *prev) % 12;
      const int after = std::abs(*other_now - candidate) % 12;
      if (before == after && (after == 0 || after == 7)) cost.parallels += 3.0;
    }
  }

  if (const auto upper = ctx.pitch_at(upper_neighbour(ctx.voice), i); upper && *upper - candidate > 12) {
    cost.spacing = 2.0;
  }
  return cost;
}

std::vector<double> RulebookScorer::score(const ScoringContext& ctx, std::span<const int> candidates) {
  std::vector<double> out;
  out.reserve(candidates.size());
  for (int c : candidates) out.push_back(-rulebook_cost(ctx, c).total());
  return out;
}

}  // namespace harmonizer
