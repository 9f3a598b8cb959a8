#include "harmonizer/pitch_tracker.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <stdexcept>

#include "harmonizer/errors.h"

namespace harmonizer {
namespace {

struct YinFrame {
  double tau = 0.0;  // interpolated lag in samples; 0 when no lag found
  double aperiodicity = 1.0;
};

// Classic YIN: difference function, cumulative-mean normalization, absolute
// threshold, parabolic refinement. `x` holds integration + max lag samples.
YinFrame yin_frame(const float* x, int integration, int tau_min, int tau_max, double threshold,
                   std::vector<double>& cmnd) {
  cmnd.assign(static_cast<std::size_t>(tau_max) + 2, 1.0);
  double running = 0.0;
  for (int tau = 1; tau <= tau_max + 1; ++tau) {
    double d = 0.0;
    for (int j = 0; j < integration; ++j) {
      double diff = static_cast<double>(x[j]) - x[j + tau];
      d += diff * diff;
    }
    running += d;
    cmnd[tau] = running > 0.0 ? d * tau / running : 1.0;
  }

  int best = -1;
  for (int tau = tau_min; tau <= tau_max; ++tau) {
    if (cmnd[tau] < threshold) {
      while (tau + 1 <= tau_max && cmnd[tau + 1] < cmnd[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best < 0) {
    best = tau_min;
    for (int tau = tau_min + 1; tau <= tau_max; ++tau) {
      if (cmnd[tau] < cmnd[best]) best = tau;
    }
  }

  double refined = best;
  if (best > 1 && best <= tau_max) {
    double a = cmnd[best - 1];
    double b = cmnd[best];
    double c = cmnd[best + 1];
    double denom = a - 2.0 * b + c;
    if (denom > 0.0) {
      double shift = 0.5 * (a - c) / denom;
      if (std::abs(shift) < 1.0) refined = best + shift;
    }
  }
  return {refined, std::clamp(cmnd[best], 0.0, 1.0)};
}

int quantize(double hz) {
  return std::clamp(static_cast<int>(std::lround(hz_to_midi(hz))), 0, 127);
}

}  // namespace

std::size_t F0Curve::voiced_count() const {
  return static_cast<std::size_t>(
      std::count_if(frames.begin(), frames.end(), [](const F0Frame& f) { return f.voiced; }));
}

double hz_to_midi(double hz) {
  if (!(hz > 0.0)) throw std::domain_error("hz_to_midi: frequency must be positive");
  return 69.0 + 12.0 * std::log2(hz / 440.0);
}

F0Curve extract_f0(const AudioBuffer& audio, const TrackerConfig& cfg) {
  if (audio.empty()) throw std::invalid_argument("extract_f0: empty audio");
  if (audio.sample_rate != kSampleRate) throw std::invalid_argument("extract_f0: expected 44100 Hz audio");

  const double fs = audio.sample_rate;
  const int integration = cfg.window / 2;
  const int tau_min = std::max(2, static_cast<int>(std::floor(fs / cfg.max_f0)));
  const int tau_max = static_cast<int>(std::ceil(fs / cfg.min_f0));
  const double rms_floor = std::pow(10.0, cfg.min_rms_dbfs / 20.0);

  const std::size_t n = audio.size();
  const std::size_t frame_count = (n + cfg.hop - 1) / cfg.hop;

  // Zero-padded copy so every frame can read [center - integration/2, center + integration/2 + tau_max].
  const std::size_t pad = static_cast<std::size_t>(integration + tau_max + 2);
  std::vector<float> padded(n + 2 * pad, 0.0f);
  std::copy(audio.samples.begin(), audio.samples.end(), padded.begin() + static_cast<long>(pad));

  F0Curve curve;
  curve.frames.resize(frame_count);
  std::vector<double> cmnd;
  for (std::size_t k = 0; k < frame_count; ++k) {
    const std::size_t center = pad + k * static_cast<std::size_t>(cfg.hop);
    const float* start = padded.data() + center - static_cast<std::size_t>(integration / 2);

    double energy = 0.0;
    for (int j = 0; j < integration; ++j) energy += static_cast<double>(start[j]) * start[j];
    const double rms = std::sqrt(energy / integration);

    F0Frame& frame = curve.frames[k];
    if (rms <= 0.0) continue;

    YinFrame y = yin_frame(start, integration, tau_min, tau_max, cfg.yin_threshold, cmnd);
    frame.periodicity = 1.0 - y.aperiodicity;
    const double f0 = y.tau > 0.0 ? fs / y.tau : 0.0;
    frame.voiced = frame.periodicity >= cfg.min_periodicity && rms >= rms_floor &&
                   f0 >= cfg.min_f0 && f0 <= cfg.max_f0;
    frame.f0 = frame.voiced ? f0 : 0.0;
  }
  return curve;
}

NoteSequence transcribe(const F0Curve& f0, const SegmenterConfig& cfg) {
  NoteSequence notes;

  struct OpenNote {
    Tick start = 0;
    Tick last_voiced = 0;
    int pitch = 0;
    std::vector<std::pair<Tick, int>> frames;  // (frame, quantized pitch)
  };
  std::optional<OpenNote> open;

  struct PendingChange {
    Tick start = 0;
    int pitch = 0;
    Tick count = 0;
  };
  std::optional<PendingChange> pending;
  Tick gap = 0;

  auto close = [&](OpenNote& note, Tick end) {
    std::vector<int> pitches;
    for (const auto& [frame, q] : note.frames) {
      if (frame < end) pitches.push_back(q);
    }
    const Tick duration = end - note.start;
    if (pitches.empty() || duration < cfg.min_note_ticks) return;
    auto mid = pitches.begin() + static_cast<long>((pitches.size() - 1) / 2);
    std::nth_element(pitches.begin(), mid, pitches.end());
    notes.push_back({note.start, duration, *mid, Voice::Soprano});
  };

  auto open_at = [&](Tick frame, int q) {
    open = OpenNote{frame, frame, q, {}};
  };

  for (std::size_t i = 0; i < f0.frames.size(); ++i) {
    const Tick t = static_cast<Tick>(i);
    const F0Frame& fr = f0.frames[i];
    if (!fr.voiced) {
      if (!open) continue;
      if (++gap >= cfg.gap_ticks) {
        close(*open, open->last_voiced + 1);
        open.reset();
        pending.reset();
      }
      continue;
    }

    gap = 0;
    const int q = quantize(fr.f0);
    if (!open) {
      open_at(t, q);
    } else if (t - open->start >= cfg.max_note_ticks) {
      const int held = open->pitch;
      close(*open, t);
      open_at(t, held);
      pending.reset();
    }

    OpenNote& note = *open;
    note.frames.emplace_back(t, q);
    note.last_voiced = t;

    if (q == note.pitch) {
      pending.reset();
      continue;
    }
    if (pending && pending->pitch == q) {
      ++pending->count;
    } else {
      pending = PendingChange{t, q, 1};
    }
    if (pending->count >= cfg.pitch_change_ticks) {
      OpenNote next{pending->start, t, q, {}};
      Tick old_end = note.start;
      for (const auto& [frame, pq] : note.frames) {
        if (frame < pending->start) old_end = frame + 1;
        else next.frames.emplace_back(frame, pq);
      }
      close(note, old_end);
      open = std::move(next);
      pending.reset();
    }
  }
  if (open) close(*open, open->last_voiced + 1);
  return notes;
}

void write_f0_csv(const F0Curve& curve, std::ostream& out) {
  out << "time,f0,periodicity\n" << std::setprecision(10);
  for (std::size_t i = 0; i < curve.size(); ++i) {
    const auto& f = curve.frames[i];
    out << curve.time_of(i) << ',' << (f.voiced ? f.f0 : 0.0) << ',' << f.periodicity << '\n';
  }
}

void write_f0_csv(const F0Curve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  write_f0_csv(curve, out);
}

}  // namespace harmonizer
