#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "harmonizer/audio_io.h"

namespace harmonizer {
namespace {

constexpr int kZeroCrossings = 32;
constexpr int kTableOversample = 512;
constexpr double kKaiserBeta = 8.6;

// Kaiser window sampled on [0, 1] (normalized distance from the center).
const std::vector<double>& kaiser_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kTableOversample * kZeroCrossings + 2);
    const double denom = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (std::size_t i = 0; i < t.size(); ++i) {
      double x = std::min(1.0, static_cast<double>(i) / (kTableOversample * kZeroCrossings));
      t[i] = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - x * x)) / denom;
    }
    return t;
  }();
  return table;
}

double kaiser(double x) {
  x = std::abs(x);
  if (x >= 1.0) return 0.0;
  const auto& t = kaiser_table();
  double pos = x * kTableOversample * kZeroCrossings;
  auto i = static_cast<std::size_t>(pos);
  double frac = pos - static_cast<double>(i);
  return t[i] + (t[i + 1] - t[i]) * frac;
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

}  // namespace

std::vector<float> resample(std::span<const float> input, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw std::invalid_argument("resample: rates must be positive");
  if (from_rate == to_rate) return {input.begin(), input.end()};
  if (input.empty()) return {};

  const double step = static_cast<double>(from_rate) / to_rate;  // input samples per output sample
  const double cutoff = std::min(1.0, static_cast<double>(to_rate) / from_rate) * 0.97;
  const double half_width = kZeroCrossings / cutoff;  // in input samples
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(input.size()) * to_rate / from_rate));
  const auto n_in = static_cast<long>(input.size());

  std::vector<float> out(out_len);
  for (std::size_t n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) * step;
    const long first = std::max(0L, static_cast<long>(std::ceil(t - half_width)));
    const long last = std::min(n_in - 1, static_cast<long>(std::floor(t + half_width)));
    double acc = 0.0;
    for (long k = first; k <= last; ++k) {
      double d = t - static_cast<double>(k);
      acc += input[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * d) * kaiser(d / half_width);
    }
    out[n] = static_cast<float>(acc);
  }
  return out;
}

}  // namespace harmonizer
