#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "fixtures.h"
#include "harmonizer/errors.h"
#include "harmonizer/midi_file.h"
#include "harmonizer/scorers.h"
#include "oracles.h"

using namespace harmonizer;

namespace {

NoteEvent note(Tick onset, int pitch, Voice v) { return {onset, 50, pitch, v}; }

struct TwoStep {
  NoteSequence melody;
  Arrangement partial;
  ScoringContext ctx(Voice v) const { return {melody, 1, v, &partial, Key{0, Mode::Major}, {}}; }
};

// Melody C5 -> G4 over alto E4, tenor C4, bass C3.
TwoStep falling_fourth() {
  TwoStep s;
  s.melody = {note(0, 72, Voice::Soprano), note(50, 67, Voice::Soprano)};
  s.partial.soprano = s.melody;
  s.partial.alto = {note(0, 64, Voice::Alto)};
  s.partial.tenor = {note(0, 60, Voice::Tenor)};
  s.partial.bass = {note(0, 48, Voice::Bass)};
  return s;
}

}  // namespace

TEST(Rulebook, HandComputedAltoCosts) {
  const auto s = falling_fourth();
  const auto ctx = s.ctx(Voice::Alto);
  EXPECT_EQ(rulebook_cost(ctx, 64).total(), 0.0);
  EXPECT_EQ(rulebook_cost(ctx, 60).total(), 4.0);
  EXPECT_EQ(rulebook_cost(ctx, 55).total(), 9.0);
  const auto nct = rulebook_cost(ctx, 65);
  EXPECT_EQ(nct.motion, 1.0);
  EXPECT_EQ(nct.non_chord, 10.0);
  RulebookScorer rb;
  const std::vector<int> cands{55, 60, 64};
  EXPECT_EQ(rb.score(ctx, cands), (std::vector<double>{-9.0, -4.0, -0.0}));
}

TEST(Rulebook, ParallelFifthIsPenalized) {
  TwoStep s;
  s.melody = {note(0, 72, Voice::Soprano), note(50, 74, Voice::Soprano)};
  s.partial.soprano = s.melody;
  s.partial.alto = {note(0, 65, Voice::Alto)};
  const auto c = rulebook_cost(s.ctx(Voice::Alto), 67);
  EXPECT_EQ(c.motion, 2.0);
  EXPECT_EQ(c.non_chord, 0.0);
  EXPECT_EQ(c.parallels, 3.0);
  EXPECT_EQ(c.total(), 5.0);
  // Contrary motion into the same interval class is not parallel.
  EXPECT_EQ(rulebook_cost(s.ctx(Voice::Alto), 62).parallels, 0.0);
}

TEST(Rulebook, ParallelOctavesCountPerUpperVoice) {
  TwoStep s;
  s.melody = {note(0, 72, Voice::Soprano), note(50, 74, Voice::Soprano)};
  s.partial.soprano = s.melody;
  s.partial.alto = {note(0, 60, Voice::Alto), note(50, 62, Voice::Alto)};
  s.partial.tenor = {note(0, 48, Voice::Tenor)};
  const auto c = rulebook_cost(s.ctx(Voice::Tenor), 50);
  EXPECT_EQ(c.parallels, 6.0);
}

TEST(Rulebook, WideSpacingIsPenalized) {
  auto s = falling_fourth();
  s.partial.alto.push_back(note(50, 64, Voice::Alto));
  EXPECT_EQ(rulebook_cost(s.ctx(Voice::Tenor), 52).spacing, 0.0);
  EXPECT_EQ(rulebook_cost(s.ctx(Voice::Tenor), 51).spacing, 2.0);
}

TEST(Rulebook, FirstNoteMotionIsDistanceToRangeCentre) {
  const NoteSequence melody{note(0, 72, Voice::Soprano)};
  Arrangement partial;
  partial.soprano = melody;
  const ScoringContext ctx{melody, 0, Voice::Alto, &partial, Key{0, Mode::Major}, {}};
  EXPECT_EQ(rulebook_cost(ctx, 64).motion, 0.5);
  EXPECT_EQ(rulebook_cost(ctx, 60).motion, 3.5);
}

TEST(Rulebook, TriadSelection) {
  EXPECT_EQ(best_triad({0, Mode::Major}, 0), (std::array<int, 3>{0, 4, 7}));
  EXPECT_EQ(best_triad({0, Mode::Major}, 2), (std::array<int, 3>{7, 11, 2}));
  EXPECT_EQ(best_triad({0, Mode::Major}, 9), (std::array<int, 3>{5, 9, 0}));
  EXPECT_EQ(best_triad({9, Mode::Minor}, 8), (std::array<int, 3>{4, 8, 11}));
  EXPECT_EQ(best_triad({0, Mode::Major}, 1), (std::array<int, 3>{1, 5, 8}));
}

TEST(RulebookProperty, CostMatchesOracleFormula) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> pick(0, 127);
  for (int trial = 0; trial < 2000; ++trial) {
    const auto melody = fixtures::random_melody(rng, 2, 55, 84);
    Arrangement partial;
    partial.soprano = melody;
    const int voice = 1 + trial % 3;
    std::vector<int> now{melody[1].pitch}, prev{melody[0].pitch};
    for (int u = 1; u < voice; ++u) {
      const Voice uv = static_cast<Voice>(u);
      const int p0 = 40 + pick(rng) % 35, p1 = 40 + pick(rng) % 35;
      partial.line(uv) = {{melody[0].onset, 1, p0, uv}, {melody[1].onset, 1, p1, uv}};
      now.push_back(p1);
      prev.push_back(p0);
    }
    const Voice v = static_cast<Voice>(voice);
    const int own_prev = 40 + pick(rng) % 35;
    partial.line(v) = {{melody[0].onset, 1, own_prev, v}};
    const auto k = oracles::best_key(melody);
    const ScoringContext ctx{melody, 1, v, &partial, Key{k.tonic, k.minor ? Mode::Minor : Mode::Major}, {}};
    const int c = 40 + pick(rng) % 35;
    EXPECT_EQ(rulebook_cost(ctx, c).total(),
              oracles::rulebook_cost(voice, c, melody[1].pitch % 12, k, false, own_prev, now, prev))
        << trial;
  }
}

TEST(Markov, UnseenContextIsUniform) {
  MarkovModel m;
  m.add(0, Voice::Alto, 99, -5, 3);
  const NoteSequence melody{note(0, 61, Voice::Soprano)};
  Arrangement partial;
  partial.soprano = melody;
  MarkovScorer sc(std::make_shared<const MarkovModel>(m));
  const ScoringContext ctx{melody, 0, Voice::Alto, &partial, Key{}, {}};
  const std::vector<int> cands{53, 55, 57, 60};
  for (double x : sc.score(ctx, cands)) EXPECT_DOUBLE_EQ(x, std::log(1.0 / 97.0));
}

TEST(Markov, ClosedFormSmoothing) {
  for (std::uint64_t k : {1u, 4u, 50u}) {
    MarkovModel mk;
    mk.add(7, Voice::Tenor, -12, -7, k);
    EXPECT_DOUBLE_EQ(mk.probability(7, Voice::Tenor, -12, -7), (k + 1.0) / (k + 97.0));
    EXPECT_DOUBLE_EQ(mk.probability(7, Voice::Tenor, -12, -8), 1.0 / (k + 97.0));
  }
  EXPECT_EQ(MarkovModel::kVocabulary, 97);
}

TEST(Markov, ProbabilitiesSumToOne) {
  MarkovModel m;
  m.add(4, Voice::Bass, 99, -16, 5);
  m.add(4, Voice::Bass, 99, -24, 2);
  m.add(4, Voice::Bass, 99, 30, 1);
  double total = 0.0;
  for (int o = MarkovModel::kMinOffset; o <= MarkovModel::kMaxOffset; ++o) total += m.probability(4, Voice::Bass, 99, o);
  EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Markov, EmptyCorpusIsAnError) {
  fixtures::TempDir dir("empty");
  EXPECT_THROW(train_markov(dir.path()), std::runtime_error);
  std::ofstream(dir / "notes.txt") << "not midi";
  std::ofstream(dir / "broken.mid") << "MThd";
  EXPECT_THROW(train_markov(dir.path()), std::runtime_error);
  EXPECT_THROW(train_markov(dir / "missing"), std::runtime_error);
}

TEST(Markov, TwoChordChoraleHandCount) {
  fixtures::TempDir dir("chorale");
  Arrangement a;
  a.soprano = {note(0, 72, Voice::Soprano), note(50, 74, Voice::Soprano)};
  a.alto = {note(0, 67, Voice::Alto), note(50, 65, Voice::Alto)};
  a.tenor = {note(0, 64, Voice::Tenor), note(50, 62, Voice::Tenor)};
  a.bass = {note(0, 48, Voice::Bass), note(50, 55, Voice::Bass)};
  export_midi(a, dir / "toy.mid");
  const auto m = train_markov(dir.path());

  MarkovModel want;
  want.add(0, Voice::Alto, 99, -5);
  want.add(2, Voice::Alto, -5, -9);
  want.add(0, Voice::Tenor, 99, -8);
  want.add(2, Voice::Tenor, -8, -12);
  want.add(0, Voice::Bass, 99, -24);
  want.add(2, Voice::Bass, -24, -19);
  EXPECT_EQ(m, want);
  EXPECT_EQ(m.context_count(), 6u);
  EXPECT_DOUBLE_EQ(m.probability(2, Voice::Bass, -24, -19), 2.0 / 98.0);
}

TEST(Markov, RetrainingIsByteIdentical) {
  fixtures::TempDir dir("corpus");
  fixtures::write_toy_corpus(dir / "c", 4, 5);
  train_markov(dir / "c").save(dir / "a.json");
  train_markov(dir / "c").save(dir / "b.json");
  EXPECT_EQ(fixtures::read_bytes(dir / "a.json"), fixtures::read_bytes(dir / "b.json"));
  const auto loaded = MarkovModel::load(dir / "a.json");
  EXPECT_EQ(loaded, train_markov(dir / "c"));
  EXPECT_GT(loaded.context_count(), 0u);
}

TEST(Markov, LoadErrors) {
  fixtures::TempDir dir("model");
  EXPECT_THROW(MarkovModel::load(dir / "none.json"), IoError);
  std::ofstream(dir / "bad.json") << "{\"format\":\"harmonizer-markov\",\"version\":2}";
  EXPECT_THROW(MarkovModel::load(dir / "bad.json"), FormatError);
  std::ofstream(dir / "junk.json") << "[1,2";
  EXPECT_THROW(MarkovModel::load(dir / "junk.json"), FormatError);
}
