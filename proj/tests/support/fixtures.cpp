#include "fixtures.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>

#include <unistd.h>

#include "harmonizer/harmony_engine.h"
#include "harmonizer/midi_file.h"
#include "harmonizer/scorers.h"

namespace fixtures {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double midi_hz(int m) { return 440.0 * std::exp2((m - 69) / 12.0); }

double formant_gain(double f) {
  struct Formant {
    double centre, bandwidth, gain;
  };
  constexpr Formant formants[] = {{700.0, 110.0, 1.0}, {1220.0, 120.0, 0.5}, {2600.0, 160.0, 0.25}};
  double g = 0.02;
  for (const auto& fm : formants) {
    const double x = (f - fm.centre) / fm.bandwidth;
    g += fm.gain / (1.0 + x * x);
  }
  return g;
}

void normalize(std::vector<float>& x, double peak) {
  float m = 0.0f;
  for (float v : x) m = std::max(m, std::abs(v));
  if (m <= 0.0f) return;
  const double s = peak / m;
  for (auto& v : x) v = static_cast<float>(v * s);
}

}  // namespace

AudioBuffer sine(double hz, double seconds, double amplitude) {
  AudioBuffer b;
  const auto n = static_cast<std::size_t>(std::llround(seconds * kFs));
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    b.samples[i] = static_cast<float>(amplitude * std::sin(kTwoPi * hz * static_cast<double>(i) / kFs));
  }
  return b;
}

AudioBuffer sine_melody(std::span<const int> pitches, double note_seconds, double amplitude) {
  AudioBuffer b;
  const auto per_note = static_cast<std::size_t>(std::llround(note_seconds * kFs));
  double phase = 0.0;
  for (int p : pitches) {
    const double step = kTwoPi * midi_hz(p) / kFs;
    for (std::size_t i = 0; i < per_note; ++i) {
      b.samples.push_back(static_cast<float>(amplitude * std::sin(phase)));
      phase = std::fmod(phase + step, kTwoPi);
    }
  }
  return b;
}

AudioBuffer scale_fixture() { return sine_melody(kScalePitches, 0.4); }

AudioBuffer vibrato_tone(double hz, double seconds, double cents_depth, double rate_hz) {
  AudioBuffer b;
  const auto n = static_cast<std::size_t>(std::llround(seconds * kFs));
  b.samples.resize(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    const double f = hz * std::exp2(cents_depth / 1200.0 * std::sin(kTwoPi * rate_hz * t));
    b.samples[i] = static_cast<float>(0.5 * std::sin(phase));
    phase = std::fmod(phase + kTwoPi * f / kFs, kTwoPi);
  }
  return b;
}

AudioBuffer glide(double from_hz, double to_hz, double seconds) {
  AudioBuffer b;
  const auto n = static_cast<std::size_t>(std::llround(seconds * kFs));
  b.samples.resize(n);
  double phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = from_hz + (to_hz - from_hz) * static_cast<double>(i) / static_cast<double>(n);
    b.samples[i] = static_cast<float>(0.5 * std::sin(phase));
    phase = std::fmod(phase + kTwoPi * f / kFs, kTwoPi);
  }
  return b;
}

template <typename F>
AudioBuffer vowel_with(F f0_of, std::size_t samples, double peak) {
  AudioBuffer b;
  b.samples.resize(samples);
  std::vector<double> phases(40, 0.0);
  for (std::size_t i = 0; i < samples; ++i) {
    const double f0 = f0_of(i);
    double acc = 0.0;
    if (f0 > 0.0) {
      for (std::size_t h = 1; h <= phases.size(); ++h) {
        const double fh = f0 * static_cast<double>(h);
        if (fh >= 0.45 * kFs) break;
        phases[h - 1] = std::fmod(phases[h - 1] + kTwoPi * fh / kFs, kTwoPi);
        acc += formant_gain(fh) * std::sin(phases[h - 1]);
      }
    }
    b.samples[i] = static_cast<float>(acc);
  }
  normalize(b.samples, peak);
  return b;
}

AudioBuffer vowel(double hz, double seconds, double peak) {
  return vowel_with([hz](std::size_t) { return hz; }, static_cast<std::size_t>(std::llround(seconds * kFs)), peak);
}

AudioBuffer ten_second_fixture() {
  constexpr int pitches[] = {57, 59, 60, 62, 64, 62, 60, 59, 57, 60, 64, 65, 67, 65, 64, 62, 60, 59, 57, 57};
  const std::size_t note = static_cast<std::size_t>(0.5 * kFs);
  const std::size_t breath = static_cast<std::size_t>(0.04 * kFs);
  auto f0_of = [&](std::size_t i) {
    const std::size_t k = i / note;
    if (k >= std::size(pitches) || i % note >= note - breath) return 0.0;
    return midi_hz(pitches[k]);
  };
  return vowel_with(f0_of, note * std::size(pitches), 0.5);
}

NoteSequence random_melody(std::mt19937_64& rng, std::size_t notes, int low, int high, harmonizer::Tick min_ticks,
                           harmonizer::Tick max_ticks) {
  std::uniform_int_distribution<int> pitch(low, high);
  std::uniform_int_distribution<harmonizer::Tick> dur(min_ticks, max_ticks);
  std::uniform_int_distribution<harmonizer::Tick> gap(0, 30);
  std::bernoulli_distribution has_gap(0.3);
  NoteSequence out;
  harmonizer::Tick t = gap(rng);
  for (std::size_t i = 0; i < notes; ++i) {
    harmonizer::NoteEvent e;
    e.onset = t;
    e.duration = dur(rng);
    e.pitch = pitch(rng);
    e.voice = harmonizer::Voice::Soprano;
    out.push_back(e);
    t = e.end() + (has_gap(rng) ? gap(rng) : 0);
  }
  return out;
}

NoteSequence random_harmony(std::mt19937_64& rng, std::size_t notes, harmonizer::Tick span) {
  std::uniform_int_distribution<harmonizer::Tick> onset(0, std::max<harmonizer::Tick>(span, 0));
  std::uniform_int_distribution<harmonizer::Tick> dur(1, 1000);
  std::uniform_int_distribution<int> voice(1, 3);
  std::uniform_int_distribution<int> pitch(0, 127);
  NoteSequence out;
  for (std::size_t i = 0; i < notes; ++i) {
    out.push_back({onset(rng), dur(rng), pitch(rng), static_cast<harmonizer::Voice>(voice(rng))});
  }
  return out;
}

void write_toy_corpus(const std::filesystem::path& dir, std::size_t count, std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(seed);
  harmonizer::RulebookScorer rulebook;
  for (std::size_t i = 0; i < count; ++i) {
    const auto melody = random_melody(rng, 16, 62, 79, 20, 80);
    harmonizer::SamplerConfig cfg;
    cfg.temperature = 0.7;
    cfg.seed = rng();
    const auto arr = harmonizer::harmonize(melody, rulebook, cfg);
    harmonizer::export_midi(arr, dir / ("chorale_" + std::to_string(1000 + i) + ".mid"));
  }
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("harmonizer_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

double median_voiced_f0(const harmonizer::F0Curve& curve) {
  std::vector<double> v;
  for (const auto& f : curve.frames) {
    if (f.voiced) v.push_back(f.f0);
  }
  if (v.empty()) return 0.0;
  std::nth_element(v.begin(), v.begin() + static_cast<long>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace fixtures
