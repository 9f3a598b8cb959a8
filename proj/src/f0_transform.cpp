#include "harmonizer/f0_transform.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <future>
#include <stdexcept>

namespace harmonizer {

long ShiftPlan::segment_at(Tick tick) const {
  auto it = std::upper_bound(segments.begin(), segments.end(), tick,
                             [](Tick t, const ShiftSegment& s) { return t < s.onset; });
  return static_cast<long>(it - segments.begin()) - 1;
}

ShiftPlan build_shift_plan(std::span<const NoteEvent> melody, std::span<const NoteEvent> harmony_voice) {
  if (melody.size() != harmony_voice.size()) {
    throw std::invalid_argument("build_shift_plan: melody and harmony lengths differ");
  }
  ShiftPlan plan;
  plan.segments.reserve(melody.size());
  for (std::size_t i = 0; i < melody.size(); ++i) {
    const int h = harmony_voice[i].pitch - melody[i].pitch;
    if (std::abs(h) > kMaxShiftSemitones) throw std::invalid_argument("build_shift_plan: offset beyond 4 octaves");
    if (!plan.segments.empty() && melody[i].onset <= plan.segments.back().onset) {
      throw std::invalid_argument("build_shift_plan: onsets must be strictly increasing");
    }
    plan.segments.push_back({melody[i].onset, h});
  }
  return plan;
}

ShiftedCurve shift_f0(const F0Curve& f0_in, const ShiftPlan& plan) {
  ShiftedCurve out;
  out.curve.frames.resize(f0_in.size());
  for (std::size_t k = 0; k < f0_in.size(); ++k) {
    const F0Frame& in = f0_in.frames[k];
    F0Frame& o = out.curve.frames[k];
    o.periodicity = in.periodicity;
    const long seg = plan.segment_at(static_cast<Tick>(k));
    if (seg < 0 || !in.voiced) continue;

    const double f = in.f0 * semitone_ratio(plan.segments[static_cast<std::size_t>(seg)].semitones);
    if (f < kMinShiftedHz || f > kMaxShiftedHz) {
      ++out.out_of_range_frames;
      continue;
    }
    o.f0 = f;
    o.voiced = true;
  }
  return out;
}

std::array<ShiftedCurve, 3> shift_harmony_voices(const Arrangement& arr, const F0Curve& f0_in, bool parallel) {
  std::array<ShiftedCurve, 3> out;
  auto one = [&](std::size_t i) {
    const Voice v = kHarmonyVoices[i];
    out[i] = shift_f0(f0_in, build_shift_plan(arr.soprano, arr.line(v)));
  };
  if (parallel) {
    std::array<std::future<void>, 3> jobs;
    for (std::size_t i = 0; i < 3; ++i) jobs[i] = std::async(std::launch::async, one, i);
    for (auto& j : jobs) j.get();
  } else {
    for (std::size_t i = 0; i < 3; ++i) one(i);
  }
  return out;
}

double midi_to_hz(double midi) { return 440.0 * std::exp2((midi - 69.0) / 12.0); }

}  // namespace harmonizer
