// Acceptance runner: one PASS/FAIL line per headline criterion.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <csignal>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fixtures.h"
#include "harmonizer/f0_transform.h"
#include "harmonizer/harmony_engine.h"
#include "harmonizer/pipeline.h"
#include "harmonizer/scorers.h"
#include "harmonizer/synthesizer.h"
#include "harmonizer/tokenizer.h"
#include "oracles.h"

using namespace harmonizer;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

using Clock = std::chrono::steady_clock;

bool run(const std::string& name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.fail(std::string("exception: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (budget_s > 0 && secs >= budget_s) o.fail("runtime " + std::to_string(secs) + " s over budget");
  std::ostringstream line;
  line << (o.pass ? "PASS " : "FAIL ") << name << " [" << secs << " s]";
  if (!o.detail.empty()) line << " " << o.detail;
  std::cout << line.str() << std::endl;
  return o.pass;
}

Outcome f0_exactness() {
  Outcome o;
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> h(-24, 24);
  std::uniform_real_distribution<double> base(50.0, 1000.0);
  std::uniform_int_distribution<int> segs(1, 12);
  std::size_t checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    F0Curve in;
    const double f = base(rng);
    const bool vibrato = trial % 2 == 1;
    for (int i = 0; i < 300; ++i) {
      const bool voiced = (rng() % 10) != 0;
      const double hz = vibrato ? f * std::exp2(0.5 / 12.0 * std::sin(0.35 * i)) : f;
      in.frames.push_back({voiced ? hz : 0.0, 0.8, voiced});
    }
    ShiftPlan plan;
    Tick onset = static_cast<Tick>(rng() % 20);
    const int n = segs(rng);
    for (int s = 0; s < n; ++s) {
      plan.segments.push_back({onset, h(rng)});
      onset += 1 + static_cast<Tick>(rng() % 40);
    }
    const auto out = shift_f0(in, plan);
    for (std::size_t i = 0; i < in.size(); ++i) {
      const auto& fo = out.curve.frames[i];
      const long seg = plan.segment_at(static_cast<Tick>(i));
      if (fo.voiced && (!in.frames[i].voiced || seg < 0)) o.fail("unvoiced frame became voiced");
      if (!fo.voiced) continue;
      const double want = std::exp2(plan.segments[static_cast<std::size_t>(seg)].semitones / 12.0);
      if (std::abs(fo.f0 / in.frames[i].f0 - want) > 1e-12 * want) o.fail("ratio off at trial " + std::to_string(trial));
      ++checked;
    }
  }
  F0Curve c;
  c.frames.assign(100, F0Frame{220.0, 0.9, true});
  for (const auto& fr : shift_f0(c, ShiftPlan{{{0, 12}}}).curve.frames) {
    if (fr.f0 != 440.0) o.fail("h=+12 does not double exactly");
  }
  if (o.pass) o.detail = std::to_string(checked) + " voiced frames";
  return o;
}

Outcome structural_suite() {
  Outcome o;
  fixtures::TempDir dir("acceptance_corpus");
  fixtures::write_toy_corpus(dir.path(), 12, 2024);
  auto model = std::make_shared<const MarkovModel>(train_markov(dir.path()));
  RulebookScorer rb;
  MarkovScorer mk(model);
  UniformScorer un;
  NoteScorer* backends[] = {&rb, &mk, &un};
  std::mt19937_64 rng(1002);
  std::size_t runs = 0;
  for (int m = 0; m < 500 && o.pass; ++m) {
    const auto melody = fixtures::random_melody(rng, 1 + static_cast<std::size_t>(m % 24));
    for (NoteScorer* b : backends) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const SamplerConfig cfg{seed == 4 ? 0.0 : 0.5 + 0.5 * static_cast<double>(seed), seed == 2 ? 0.8 : 1.0, seed};
        DecodeTrace trace;
        const auto arr = harmonize(melody, *b, cfg, kDefaultDeltaSeconds, &trace);
        const auto why = oracles::structural_violation(melody, arr, &trace);
        if (!why.empty()) o.fail(b->name() + " melody " + std::to_string(m) + ": " + why);
        ++runs;
      }
    }
  }
  if (o.pass) o.detail = std::to_string(runs) + " decodes";
  return o;
}

Outcome tokenizer_suite() {
  Outcome o;
  std::mt19937_64 rng(1003);
  std::uniform_int_distribution<std::size_t> count(0, 30);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto melody = fixtures::random_melody(rng, count(rng), 0, 127, 1, 1000);
    const auto harmony = fixtures::random_harmony(rng, count(rng), melody.empty() ? 800 : melody.back().end());
    const auto ts = encode(melody, harmony);
    if (!satisfies_anticipation(ts)) o.fail("anticipation violated at trial " + std::to_string(trial));
    const auto dec = decode(ts);
    auto m = melody;
    auto h = harmony;
    canonical_sort(m);
    canonical_sort(h);
    if (dec.melody != m || dec.harmony != h) o.fail("decode(encode) differs at trial " + std::to_string(trial));
    if (to_json(encode(dec.melody, dec.harmony)) != to_json(ts)) o.fail("re-encode differs at trial " + std::to_string(trial));
  }
  if (o.pass) o.detail = "1000 inputs";
  return o;
}

Outcome rulebook_oracle() {
  Outcome o;
  std::mt19937_64 rng(1004);
  RulebookScorer rb;
  for (int trial = 0; trial < 50; ++trial) {
    const auto melody = fixtures::random_melody(rng, 1 + static_cast<std::size_t>(trial % 8));
    const auto arr = harmonize(melody, rb, SamplerConfig::greedy());
    const auto want = oracles::rulebook_greedy(melody);
    for (int v = 0; v < 3; ++v) {
      const auto& line = arr.line(kHarmonyVoices[static_cast<std::size_t>(v)]);
      for (std::size_t i = 0; i < melody.size(); ++i) {
        if (line[i].pitch != want[static_cast<std::size_t>(v)][i]) o.fail("mismatch at melody " + std::to_string(trial));
      }
    }
  }
  if (o.pass) o.detail = "50 melodies";
  return o;
}

Outcome transcription_fixture() {
  Outcome o;
  const auto notes = transcribe(extract_f0(fixtures::scale_fixture()));
  if (notes.size() != 8) {
    o.fail("scale gave " + std::to_string(notes.size()) + " events");
    return o;
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    if (notes[i].pitch != fixtures::kScalePitches[i]) o.fail("wrong pitch at note " + std::to_string(i));
    worst = std::max(worst, std::abs(notes[i].onset_seconds() - 0.4 * static_cast<double>(i)));
  }
  if (worst > 0.030) o.fail("onset error " + std::to_string(worst * 1000) + " ms");
  const auto vib = transcribe(extract_f0(fixtures::vibrato_tone(440.0, 1.5, 20.0)));
  if (vib.size() != 1 || vib[0].pitch != 69) o.fail("vibrato tone gave " + std::to_string(vib.size()) + " events");
  if (o.pass) o.detail = "max onset error " + std::to_string(worst * 1000) + " ms";
  return o;
}

Outcome synthesis_round_trip() {
  Outcome o;
  const auto in = fixtures::scale_fixture();
  const auto f0 = extract_f0(in);
  const auto melody = transcribe(f0);
  RulebookScorer rb;
  SamplerConfig cfg;
  cfg.seed = 42;
  const auto arr = harmonize(melody, rb, cfg);
  const auto targets = shift_harmony_voices(arr, f0);
  const auto stems = render_harmony_stems(in, f0, targets);
  std::ostringstream detail;
  for (std::size_t v = 0; v < 3; ++v) {
    if (stems[v].size() != in.size()) o.fail("stem length differs");
    const auto re = extract_f0(stems[v]);
    std::size_t both = 0, good = 0;
    for (std::size_t i = 0; i < re.size(); ++i) {
      const auto& t = targets[v].curve.frames[i];
      if (!t.voiced || !re.frames[i].voiced) continue;
      ++both;
      good += std::abs(fixtures::cents(re.frames[i].f0, t.f0)) <= 30.0;
    }
    const double frac = both ? static_cast<double>(good) / static_cast<double>(both) : 0.0;
    detail << voice_name(kHarmonyVoices[v]) << " " << good << "/" << both << " ";
    if (frac < 0.9) o.fail(std::string(voice_name(kHarmonyVoices[v])) + " only " + std::to_string(frac * 100) + "% within 30 cents");
  }
  if (o.pass) o.detail = detail.str();
  return o;
}

int cli(const std::string& args, std::string* out = nullptr) {
  const std::string cmd = std::string(HARMONIZE_PATH) + " " + args + " 2>/dev/null";
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return -1;
  char buf[512];
  std::string text;
  while (std::fgets(buf, sizeof buf, p)) text += buf;
  const int status = ::pclose(p);
  if (out) *out = text;
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end() {
  Outcome o;
  fixtures::TempDir dir("acceptance_e2e");
  save_audio(fixtures::scale_fixture(), dir / "scale.wav", BitDepth::Pcm16);
  save_audio(fixtures::ten_second_fixture(), dir / "ten.wav", BitDepth::Pcm16);
  const std::string scale = (dir / "scale.wav").string();
  if (cli(scale + " -o " + (dir / "a").string() + " --seed 42") != 0 ||
      cli(scale + " -o " + (dir / "b").string() + " --seed 42") != 0) {
    o.fail("pipeline run failed");
    return o;
  }
  if (fixtures::read_bytes(dir / "a.mix.wav") != fixtures::read_bytes(dir / "b.mix.wav")) o.fail("mix.wav differs");

  std::string bench;
  const auto t0 = Clock::now();
  const int rc = cli((dir / "ten.wav").string() + " -o " + (dir / "ten").string() + " --stems --bench --seed 42", &bench);
  const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
  if (rc != 0) {
    o.fail("10 s pipeline exited " + std::to_string(rc));
    return o;
  }
  if (secs >= 60.0) o.fail("10 s pipeline took " + std::to_string(secs) + " s");
  const auto j = nlohmann::ordered_json::parse(bench);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) {
    keys.push_back(k);
    if (!v.is_number()) o.fail("non-numeric bench value");
  }
  if (keys != std::vector<std::string>{"transcription_ms", "harmony_ms", "f0_ms", "synthesis_ms", "total_ms"}) {
    o.fail("bench keys differ: " + bench);
  }
  if (o.pass) o.detail = "10 s input in " + std::to_string(secs) + " s";
  return o;
}

}  // namespace

int main() {
  std::signal(SIGPIPE, SIG_IGN);
  int failures = 0;
  failures += !run("f0-shift-exactness", 1.0, f0_exactness);
  failures += !run("structural-constraints", 30.0, structural_suite);
  failures += !run("tokenizer-round-trip", 5.0, tokenizer_suite);
  failures += !run("rulebook-oracle", 10.0, rulebook_oracle);
  failures += !run("transcription-fixture", 0.0, transcription_fixture);
  failures += !run("synthesis-round-trip", 0.0, synthesis_round_trip);
  failures += !run("end-to-end-determinism-bench", 0.0, end_to_end);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures == 0 ? 0 : 1;
}
