#include "harmonizer/key_estimate.h"

#include <cmath>
#include <numeric>

namespace harmonizer {
namespace {

double pearson(const std::array<double, 12>& x, const std::array<double, 12>& y) {
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / 12.0;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / 12.0;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (int i = 0; i < 12; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

std::array<double, 12> rotate(const std::array<double, 12>& profile, int tonic) {
  std::array<double, 12> out{};
  for (int pc = 0; pc < 12; ++pc) out[pc] = profile[(pc - tonic + 12) % 12];
  return out;
}

}  // namespace

std::array<double, 12> pitch_class_histogram(std::span<const NoteEvent> melody) {
  std::array<double, 12> h{};
  for (const auto& n : melody) h[n.pitch % 12] += static_cast<double>(n.duration);
  return h;
}

Key key_estimate(std::span<const NoteEvent> melody) {
  const auto hist = pitch_class_histogram(melody);
  Key best{};
  double best_r = -2.0;
  for (int tonic = 0; tonic < 12; ++tonic) {
    for (Mode mode : {Mode::Major, Mode::Minor}) {
      const auto& profile = mode == Mode::Major ? kMajorProfile : kMinorProfile;
      const double r = pearson(hist, rotate(profile, tonic));
      if (r > best_r) {
        best_r = r;
        best = {tonic, mode};
      }
    }
  }
  return best;
}

}  // namespace harmonizer
