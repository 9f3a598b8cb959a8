#include "harmonizer/pipeline.h"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "harmonizer/errors.h"
#include "harmonizer/external_scorer.h"
#include "harmonizer/midi_file.h"
#include "harmonizer/pitch_tracker.h"
#include "harmonizer/scorers.h"
#include "harmonizer/tokenizer.h"

namespace harmonizer {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Runs `fn`, rethrowing any failure as a PipelineError for `stage`.
template <typename Fn>
auto in_stage(const std::string& stage, Fn&& fn) {
  try {
    return fn();
  } catch (const PipelineError&) {
    throw;
  } catch (const IoError& e) {
    throw PipelineError(stage, 3, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    throw PipelineError(stage, 3, e.what());
  } catch (const std::exception& e) {
    throw PipelineError(stage, 4, e.what());
  }
}

void write_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace

BackendKind parse_backend(const std::string& name) {
  if (name == "rulebook") return BackendKind::Rulebook;
  if (name == "markov") return BackendKind::Markov;
  if (name == "external") return BackendKind::External;
  if (name == "uniform") return BackendKind::Uniform;
  throw std::invalid_argument("unknown backend '" + name + "'");
}

OutputMode parse_output_mode(const std::string& name) {
  if (name == "mix") return OutputMode::Mix;
  if (name == "stems") return OutputMode::Stems;
  if (name == "both") return OutputMode::Both;
  throw std::invalid_argument("unknown output mode '" + name + "'");
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::Rulebook:
      return "rulebook";
    case BackendKind::Markov:
      return "markov";
    case BackendKind::External:
      return "external";
    case BackendKind::Uniform:
      return "uniform";
  }
  return "unknown";
}

void PipelineConfig::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be positive");
  if (!(sampler.temperature >= 0.0) || !std::isfinite(sampler.temperature)) {
    throw std::invalid_argument("temperature must be positive (0 selects greedy decoding)");
  }
  if (!(sampler.top_p > 0.0 && sampler.top_p <= 1.0)) throw std::invalid_argument("top-p must lie in (0, 1]");
  if (backend == BackendKind::Markov && markov_model.empty()) {
    throw std::invalid_argument("the markov backend needs --markov-model");
  }
  if (backend == BackendKind::External && external_cmd.empty() == external_addr.empty()) {
    throw std::invalid_argument("the external backend needs exactly one of --external-cmd or --external-addr");
  }
}

std::string StageTimings::to_json() const {
  nlohmann::ordered_json j;
  j["transcription_ms"] = transcription_ms;
  j["harmony_ms"] = harmony_ms;
  j["f0_ms"] = f0_ms;
  j["synthesis_ms"] = synthesis_ms;
  j["total_ms"] = total_ms;
  return j.dump();
}

std::vector<std::filesystem::path> output_paths(const std::filesystem::path& base, OutputMode mode) {
  std::filesystem::path stem = base;
  if (stem.extension() == ".wav") stem.replace_extension();
  auto with = [&](const char* suffix) {
    auto p = stem;
    p += suffix;
    return p;
  };
  std::vector<std::filesystem::path> out;
  if (mode != OutputMode::Stems) out.push_back(with(".mix.wav"));
  if (mode != OutputMode::Mix) {
    out.push_back(with(".alto.wav"));
    out.push_back(with(".tenor.wav"));
    out.push_back(with(".bass.wav"));
  }
  return out;
}

std::unique_ptr<NoteScorer> make_backend(const PipelineConfig& cfg) {
  switch (cfg.backend) {
    case BackendKind::Rulebook:
      return std::make_unique<RulebookScorer>();
    case BackendKind::Uniform:
      return std::make_unique<UniformScorer>();
    case BackendKind::Markov:
      return std::make_unique<MarkovScorer>(std::make_shared<const MarkovModel>(MarkovModel::load(cfg.markov_model)));
    case BackendKind::External:
      return std::make_unique<ExternalScorer>(cfg.external_cmd.empty() ? connect_tcp_channel(cfg.external_addr)
                                                                       : spawn_process_channel(cfg.external_cmd));
  }
  throw std::invalid_argument("unknown backend");
}

PipelineResult run_pipeline(const std::filesystem::path& input, const std::filesystem::path& output_base,
                            const PipelineConfig& cfg) {
  const auto start = Clock::now();
  cfg.validate();
  PipelineResult result;

  const AudioBuffer audio = in_stage("load", [&] {
    try {
      return load_audio(input);
    } catch (const FormatError& e) {
      throw IoError(e.what());
    }
  });

  std::unique_ptr<NoteScorer> backend = in_stage("backend", [&] { return make_backend(cfg); });

  const auto& debug = cfg.debug_dir;
  if (debug) {
    in_stage("debug", [&] {
      std::error_code ec;
      std::filesystem::create_directories(*debug, ec);
      if (ec) throw IoError("cannot create debug directory " + debug->string());
      return 0;
    });
  }

  // 1. Voice-to-MIDI.
  auto t = Clock::now();
  const F0Curve f0_in = in_stage("transcription", [&] { return extract_f0(audio); });
  const NoteSequence melody = in_stage("transcription", [&] { return transcribe(f0_in); });
  result.timings.transcription_ms = elapsed_ms(t);
  result.melody_notes = melody.size();
  if (debug) in_stage("transcription", [&] { write_f0_csv(f0_in, *debug / "f0_in.csv"); return 0; });

  // 2. Harmony.
  t = Clock::now();
  Arrangement arrangement;
  DecodeTrace trace;
  if (melody.empty()) {
    std::cerr << "warning: no notes transcribed; harmony voices will be silent\n";
  } else {
    arrangement = in_stage("harmony", [&] { return harmonize(melody, *backend, cfg.sampler, cfg.delta, &trace); });
  }
  result.timings.harmony_ms = elapsed_ms(t);
  if (debug) {
    in_stage("harmony", [&] {
      write_tokens(trace.tokens, *debug / "tokens.json");
      export_midi(arrangement, *debug / "arrangement.mid");
      return 0;
    });
  }

  // 3. f0 shift per harmony voice.
  t = Clock::now();
  const auto targets = in_stage("f0", [&] { return shift_harmony_voices(arrangement, f0_in, cfg.synth.parallel); });
  result.timings.f0_ms = elapsed_ms(t);
  for (const auto& s : targets) result.out_of_range_frames += s.out_of_range_frames;
  if (debug) {
    in_stage("f0", [&] {
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const std::string name = "f0_" + std::string(voice_name(kHarmonyVoices[i])) + ".csv";
        write_f0_csv(targets[i].curve, *debug / name);
      }
      return 0;
    });
  }

  // 4. Synthesis and mix.
  t = Clock::now();
  auto [stems, mixdown] = in_stage("synthesis", [&] {
    auto harmony = render_harmony_stems(audio, f0_in, targets, cfg.synth);
    const std::array<AudioBuffer, kVoiceCount> all{audio, harmony[0], harmony[1], harmony[2]};
    const std::array<double, kVoiceCount> gains{1.0, 1.0, 1.0, 1.0};
    return std::pair{std::move(harmony), mix(all, gains)};
  });
  result.timings.synthesis_ms = elapsed_ms(t);

  // Encode everything first, then commit; nothing is left behind on failure.
  in_stage("write", [&] {
    std::vector<std::pair<std::filesystem::path, std::vector<unsigned char>>> files;
    const auto paths = output_paths(output_base, cfg.output);
    std::size_t p = 0;
    if (cfg.output != OutputMode::Stems) files.emplace_back(paths[p++], encode_wav(mixdown, BitDepth::Float32));
    if (cfg.output != OutputMode::Mix) {
      for (const auto& stem : stems) files.emplace_back(paths[p++], encode_wav(stem, BitDepth::Float32));
    }
    if (cfg.midi_out) files.emplace_back(*cfg.midi_out, encode_arrangement_midi(arrangement));

    std::vector<std::filesystem::path> committed;
    try {
      for (const auto& [path, bytes] : files) {
        auto tmp = path;
        tmp += ".partial";
        write_bytes(tmp, bytes);
        committed.push_back(tmp);
      }
      for (const auto& [path, bytes] : files) {
        auto tmp = path;
        tmp += ".partial";
        std::filesystem::rename(tmp, path);
        result.written.push_back(path);
      }
    } catch (...) {
      std::error_code ec;
      for (const auto& f : committed) std::filesystem::remove(f, ec);
      for (const auto& f : result.written) std::filesystem::remove(f, ec);
      throw;
    }
    return 0;
  });

  result.arrangement = std::move(arrangement);
  result.timings.total_ms = elapsed_ms(start);
  return result;
}

}  // namespace harmonizer
