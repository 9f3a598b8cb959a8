#include "harmonizer/synthesizer.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <future>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace harmonizer {
namespace {

constexpr int kEnvFrame = 2048;
constexpr int kEnvHop = 512;
constexpr double kMaxEnvelopeGain = 4.0;  // +/-12 dB

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

class Spectrum {
 public:
  explicit Spectrum(int n) : n_(n), bins_(n / 2 + 1) {
    real_ = fftw_alloc_real(static_cast<std::size_t>(n));
    complex_ = fftw_alloc_complex(static_cast<std::size_t>(bins_));
    std::lock_guard lock(fftw_planner_mutex());
    forward_ = fftw_plan_dft_r2c_1d(n, real_, complex_, FFTW_ESTIMATE);
    inverse_ = fftw_plan_dft_c2r_1d(n, complex_, real_, FFTW_ESTIMATE);
  }
  ~Spectrum() {
    {
      std::lock_guard lock(fftw_planner_mutex());
      fftw_destroy_plan(forward_);
      fftw_destroy_plan(inverse_);
    }
    fftw_free(real_);
    fftw_free(complex_);
  }
  Spectrum(const Spectrum&) = delete;
  Spectrum& operator=(const Spectrum&) = delete;

  double* time() { return real_; }
  std::complex<double>* freq() { return reinterpret_cast<std::complex<double>*>(complex_); }
  int size() const { return n_; }
  int bins() const { return bins_; }
  void forward() { fftw_execute(forward_); }
  /// Unnormalized inverse (scaled by n).
  void inverse() { fftw_execute(inverse_); }

 private:
  int n_;
  int bins_;
  double* real_;
  fftw_complex* complex_;
  fftw_plan forward_;
  fftw_plan inverse_;
};

// Frame-grid view of a curve at arbitrary sample positions.
class CurveSampler {
 public:
  explicit CurveSampler(const F0Curve& c) : curve_(c) {}

  bool voiced_frame(long k) const {
    return k >= 0 && k < static_cast<long>(curve_.size()) && curve_.frames[static_cast<std::size_t>(k)].voiced;
  }

  /// f0 at sample position `pos`, linearly interpolated between voiced frame
  /// centers; nullopt when the nearest frame is unvoiced.
  std::optional<double> at(double pos) const {
    const double x = pos / kHopSamples;
    const long nearest = std::lround(x);
    if (!voiced_frame(nearest)) return std::nullopt;
    const long k0 = static_cast<long>(std::floor(x));
    if (voiced_frame(k0) && voiced_frame(k0 + 1)) {
      const double frac = x - static_cast<double>(k0);
      const double a = curve_.frames[static_cast<std::size_t>(k0)].f0;
      const double b = curve_.frames[static_cast<std::size_t>(k0 + 1)].f0;
      return a + (b - a) * frac;
    }
    return curve_.frames[static_cast<std::size_t>(nearest)].f0;
  }

 private:
  const F0Curve& curve_;
};

struct SampleSpan {
  long begin;
  long end;  // exclusive
};

// Sample spans covered by runs of frames satisfying `pred`; frame k covers
// [k*hop - hop/2, k*hop + hop/2).
template <typename Pred>
std::vector<SampleSpan> voiced_spans(std::size_t frames, long samples, Pred pred) {
  std::vector<SampleSpan> spans;
  std::size_t k = 0;
  while (k < frames) {
    if (!pred(k)) {
      ++k;
      continue;
    }
    std::size_t j = k;
    while (j < frames && pred(j)) ++j;
    const long b = std::max(0L, static_cast<long>(k) * kHopSamples - kHopSamples / 2);
    const long e = std::min(samples, static_cast<long>(j) * kHopSamples - kHopSamples / 2);
    if (e > b) spans.push_back({b, e});
    k = j;
  }
  return spans;
}

double sample_at(const std::vector<float>& x, double pos) {
  const double fl = std::floor(pos);
  const long i = static_cast<long>(fl);
  const double frac = pos - fl;
  const long n = static_cast<long>(x.size());
  const double a = (i >= 0 && i < n) ? x[static_cast<std::size_t>(i)] : 0.0;
  const double b = (i + 1 >= 0 && i + 1 < n) ? x[static_cast<std::size_t>(i + 1)] : 0.0;
  return a + (b - a) * frac;
}

// Pitch marks spaced one local period apart across every voiced run of the
// source, each run anchored at the run's largest sample in its first period.
std::vector<double> analysis_marks(const std::vector<float>& x, const F0Curve& f0_in) {
  const CurveSampler in(f0_in);
  const long n = static_cast<long>(x.size());
  std::vector<double> marks;
  for (const auto& span : voiced_spans(f0_in.size(), n, [&](std::size_t k) { return f0_in.frames[k].voiced; })) {
    auto f = in.at(static_cast<double>(span.begin));
    if (!f) f = in.at(static_cast<double>(span.begin + kHopSamples / 2));
    if (!f) continue;
    const long period = static_cast<long>(std::lround(kSampleRate / *f));
    long anchor = span.begin;
    for (long i = span.begin; i < std::min(span.end, span.begin + period); ++i) {
      if (x[static_cast<std::size_t>(i)] > x[static_cast<std::size_t>(anchor)]) anchor = i;
    }
    double m = static_cast<double>(anchor);
    double last_period = kSampleRate / *f;
    while (m < static_cast<double>(span.end)) {
      marks.push_back(m);
      const auto fm = in.at(m);
      if (fm) last_period = kSampleRate / *fm;
      m += last_period;
    }
  }
  return marks;
}

// TD-PSOLA: for each synthesis mark, overlap-add the Hann grain (two source
// periods) around the nearest analysis mark.
std::vector<double> psola(const std::vector<float>& x, const F0Curve& f0_in, const F0Curve& f0_out) {
  const long n = static_cast<long>(x.size());
  std::vector<double> y(x.size(), 0.0);
  const std::vector<double> marks = analysis_marks(x, f0_in);
  if (marks.empty()) return y;
  const CurveSampler in(f0_in);
  const CurveSampler out(f0_out);

  auto nearest_mark = [&](double s) {
    auto it = std::lower_bound(marks.begin(), marks.end(), s);
    if (it == marks.end()) return marks.back();
    if (it == marks.begin()) return *it;
    return (*it - s) < (s - *(it - 1)) ? *it : *(it - 1);
  };

  const auto target_spans = voiced_spans(f0_out.size(), n, [&](std::size_t k) {
    return f0_out.frames[k].voiced && f0_in.frames[k].voiced;
  });
  for (const auto& span : target_spans) {
    // Start on an analysis mark so an identity target reproduces the source.
    double s = nearest_mark(static_cast<double>(span.begin));
    if (s < static_cast<double>(span.begin)) {
      auto it = std::lower_bound(marks.begin(), marks.end(), static_cast<double>(span.begin));
      s = it != marks.end() ? *it : static_cast<double>(span.begin);
    }
    while (s < static_cast<double>(span.end)) {
      const auto f_out = out.at(s);
      const double a = nearest_mark(s);
      const auto f_in = in.at(a);
      if (!f_out || !f_in) {
        s += kHopSamples / 4.0;
        continue;
      }
      const double t_in = kSampleRate / *f_in;
      const double t_out = kSampleRate / *f_out;
      if (std::abs(a - s) <= 2.0 * t_in) {
        const double ratio = t_out / t_in;
        const double gain = ratio <= 1.0 ? ratio : std::sqrt(ratio);
        const long lo = std::max(0L, static_cast<long>(std::ceil(s - t_in)));
        const long hi = std::min(n - 1, static_cast<long>(std::floor(s + t_in)));
        for (long i = lo; i <= hi; ++i) {
          const double d = static_cast<double>(i) - s;
          const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * d / t_in));
          y[static_cast<std::size_t>(i)] += gain * w * sample_at(x, a + d);
        }
      }
      s += t_out;
    }
  }
  return y;
}

// Low-quefrency cepstral envelope (natural-log magnitude) of the current
// contents of spec.freq().
void cepstral_envelope(Spectrum& spec, Spectrum& work, int lifter, std::vector<double>& env) {
  const int n = spec.size();
  for (int b = 0; b < spec.bins(); ++b) {
    work.freq()[b] = std::log(std::max(std::abs(spec.freq()[b]), 1e-9));
  }
  work.inverse();  // real cepstrum * n
  for (int q = 0; q < n; ++q) {
    const int dist = std::min(q, n - q);
    work.time()[q] = dist <= lifter ? work.time()[q] / n : 0.0;
  }
  work.forward();
  env.resize(static_cast<std::size_t>(spec.bins()));
  for (int b = 0; b < spec.bins(); ++b) env[static_cast<std::size_t>(b)] = work.freq()[b].real();
}

// Reshapes y so each frame's cepstral envelope matches the source's.
void correct_envelope(const std::vector<float>& x, std::vector<double>& y, const F0Curve& f0_in,
                      const F0Curve& f0_out) {
  const long n = static_cast<long>(x.size());
  Spectrum sx(kEnvFrame), sy(kEnvFrame), work(kEnvFrame);
  std::vector<double> window(kEnvFrame);
  for (int i = 0; i < kEnvFrame; ++i) window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / kEnvFrame);

  std::vector<double> out(y.size(), 0.0);
  std::vector<double> norm(y.size(), 0.0);
  std::vector<double> env_x, env_y;
  const CurveSampler in(f0_in), target(f0_out);

  for (long start = -kEnvFrame / 2; start < n; start += kEnvHop) {
    double energy = 0.0;
    for (int i = 0; i < kEnvFrame; ++i) {
      const long idx = start + i;
      const bool inside = idx >= 0 && idx < n;
      sx.time()[i] = inside ? window[i] * x[static_cast<std::size_t>(idx)] : 0.0;
      sy.time()[i] = inside ? window[i] * y[static_cast<std::size_t>(idx)] : 0.0;
      energy += sy.time()[i] * sy.time()[i];
    }
    const double center = static_cast<double>(start + kEnvFrame / 2);
    const auto fi = in.at(center);
    const auto fo = target.at(center);
    sy.forward();
    if (energy > 1e-12 && fi && fo) {
      sx.forward();
      const int lifter = std::clamp(static_cast<int>(0.5 * kSampleRate / std::max(*fi, *fo)), 8, 60);
      cepstral_envelope(sx, work, lifter, env_x);
      cepstral_envelope(sy, work, lifter, env_y);
      for (int b = 0; b < sy.bins(); ++b) {
        const double g = std::clamp(std::exp(env_x[static_cast<std::size_t>(b)] - env_y[static_cast<std::size_t>(b)]),
                                    1.0 / kMaxEnvelopeGain, kMaxEnvelopeGain);
        sy.freq()[b] *= g;
      }
    }
    sy.inverse();
    for (int i = 0; i < kEnvFrame; ++i) {
      const long idx = start + i;
      if (idx < 0 || idx >= n) continue;
      out[static_cast<std::size_t>(idx)] += window[i] * sy.time()[i] / kEnvFrame;
      norm[static_cast<std::size_t>(idx)] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = norm[i] > 1e-9 ? out[i] / norm[i] : 0.0;
}

// Per-sample gain: 1 inside spans, 0 outside, with linear ramps of `ramp`
// samples centered on each edge.
std::vector<double> span_gate(const std::vector<SampleSpan>& spans, long n, long ramp) {
  std::vector<double> mask(static_cast<std::size_t>(n), 0.0);
  for (const auto& s : spans) {
    for (long i = s.begin; i < s.end; ++i) mask[static_cast<std::size_t>(i)] = 1.0;
  }
  if (ramp <= 1) return mask;
  // Moving average turns each step into a linear ramp.
  std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
  for (long i = 0; i < n; ++i) prefix[static_cast<std::size_t>(i) + 1] = prefix[static_cast<std::size_t>(i)] + mask[static_cast<std::size_t>(i)];
  std::vector<double> gate(static_cast<std::size_t>(n));
  const long half = ramp / 2;
  for (long i = 0; i < n; ++i) {
    const long lo = std::max(0L, i - half);
    const long hi = std::min(n, i + half + 1);
    gate[static_cast<std::size_t>(i)] =
        (prefix[static_cast<std::size_t>(hi)] - prefix[static_cast<std::size_t>(lo)]) / static_cast<double>(hi - lo);
  }
  return gate;
}

}  // namespace

VoiceRender synthesize_voice(const AudioBuffer& input, const F0Curve& f0_in, const F0Curve& f0_out, Voice voice,
                             const SynthConfig& cfg) {
  const std::size_t frames = frame_count_for(input.size());
  if (f0_in.size() != frames || f0_out.size() != frames) {
    throw std::invalid_argument("synthesize_voice: f0 curves do not match the input's frame grid");
  }
  if (input.sample_rate != kSampleRate) throw std::invalid_argument("synthesize_voice: expected 44100 Hz input");

  const auto& x = input.samples;
  const long n = static_cast<long>(x.size());

  std::vector<double> y = psola(x, f0_in, f0_out);
  if (cfg.envelope_correction && f0_out.voiced_count() > 0) correct_envelope(x, y, f0_in, f0_out);

  const long ramp = static_cast<long>(cfg.gate_ramp_seconds * kSampleRate);
  const auto voiced = voiced_spans(frames, n, [&](std::size_t k) { return f0_out.frames[k].voiced; });
  const std::vector<double> gate = span_gate(voiced, n, ramp);
  for (long i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] *= gate[static_cast<std::size_t>(i)];

  if (cfg.consonant_passthrough) {
    const double floor = std::pow(10.0, cfg.consonant_min_rms_dbfs / 20.0);
    auto near_target = [&](std::size_t k) {
      const long lo = std::max(0L, static_cast<long>(k) - static_cast<long>(cfg.consonant_reach_ticks));
      const long hi = std::min(static_cast<long>(frames) - 1, static_cast<long>(k) + static_cast<long>(cfg.consonant_reach_ticks));
      for (long j = lo; j <= hi; ++j) {
        if (f0_out.frames[static_cast<std::size_t>(j)].voiced) return true;
      }
      return false;
    };
    auto frame_rms = [&](std::size_t k) {
      const long b = std::max(0L, static_cast<long>(k) * kHopSamples - kHopSamples / 2);
      const long e = std::min(n, b + kHopSamples);
      double acc = 0.0;
      for (long i = b; i < e; ++i) acc += static_cast<double>(x[static_cast<std::size_t>(i)]) * x[static_cast<std::size_t>(i)];
      return e > b ? std::sqrt(acc / static_cast<double>(e - b)) : 0.0;
    };
    const auto consonants = voiced_spans(frames, n, [&](std::size_t k) {
      return !f0_in.frames[k].voiced && !f0_out.frames[k].voiced && near_target(k) && frame_rms(k) >= floor;
    });
    if (!consonants.empty()) {
      const std::vector<double> pass = span_gate(consonants, n, ramp);
      for (long i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] += cfg.consonant_gain * pass[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
      }
    }
  }

  VoiceRender render;
  render.voice = voice;
  render.target = f0_out;
  render.audio.sample_rate = input.sample_rate;
  render.audio.samples.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    render.audio.samples[i] = static_cast<float>(std::clamp(y[i], -1.0, 1.0));
  }
  return render;
}

std::array<AudioBuffer, 3> render_harmony_stems(const AudioBuffer& input, const F0Curve& f0_in,
                                                const std::array<ShiftedCurve, 3>& targets, const SynthConfig& cfg) {
  std::array<AudioBuffer, 3> stems;
  auto one = [&](std::size_t i) {
    stems[i] = synthesize_voice(input, f0_in, targets[i].curve, kHarmonyVoices[i], cfg).audio;
  };
  if (cfg.parallel) {
    std::array<std::future<void>, 3> jobs;
    for (std::size_t i = 0; i < 3; ++i) jobs[i] = std::async(std::launch::async, one, i);
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < 3; ++i) one(i);
  }
  return stems;
}

RenderedArrangement render_arrangement(const AudioBuffer& input, const Arrangement& arr, const F0Curve& f0_in,
                                       const SynthConfig& cfg) {
  RenderedArrangement result;
  result.stems[0] = input;
  result.targets[0] = f0_in;

  auto targets = shift_harmony_voices(arr, f0_in, cfg.parallel);
  auto stems = render_harmony_stems(input, f0_in, targets, cfg);
  for (std::size_t i = 0; i < 3; ++i) {
    result.stems[i + 1] = std::move(stems[i]);
    result.out_of_range_frames[i + 1] = targets[i].out_of_range_frames;
    result.targets[i + 1] = std::move(targets[i].curve);
  }

  const std::array<double, kVoiceCount> gains{1.0, 1.0, 1.0, 1.0};
  result.mixdown = mix(result.stems, gains);
  return result;
}

}  // namespace harmonizer
