/**
 * @file pipeline.h
 * @brief End-to-end run: load -> f0 + transcription -> harmony -> f0 shift ->
 *        synthesis -> mix, with per-stage wall-clock timings.
 */

#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "harmonizer/harmony_engine.h"
#include "harmonizer/synthesizer.h"

namespace harmonizer {

enum class BackendKind { Rulebook, Markov, External, Uniform };
enum class OutputMode { Mix, Stems, Both };

BackendKind parse_backend(const std::string& name);
OutputMode parse_output_mode(const std::string& name);
std::string to_string(BackendKind kind);

struct PipelineConfig {
  BackendKind backend = BackendKind::Rulebook;
  double delta = kDefaultDeltaSeconds;
  SamplerConfig sampler{};
  OutputMode output = OutputMode::Mix;
  std::optional<std::filesystem::path> midi_out;
  std::optional<std::filesystem::path> debug_dir;
  bool bench = false;
  std::filesystem::path markov_model;
  std::string external_cmd;
  std::string external_addr;
  SynthConfig synth{};

  /// Throws std::invalid_argument.
  void validate() const;
};

/// Wall-clock milliseconds per stage. Transcription includes f0 extraction;
/// the f0 stage is the per-voice shift of that curve.
struct StageTimings {
  double transcription_ms = 0.0;
  double harmony_ms = 0.0;
  double f0_ms = 0.0;
  double synthesis_ms = 0.0;
  double total_ms = 0.0;

  /// {"transcription_ms":..,"harmony_ms":..,"f0_ms":..,"synthesis_ms":..,"total_ms":..}
  std::string to_json() const;
};

/// A failure inside the pipeline, tagged with the stage and the CLI exit code
/// (3 for I/O, 4 for a stage failure).
class PipelineError : public std::runtime_error {
 public:
  PipelineError(std::string stage, int exit_code, const std::string& what)
      : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), exit_code_(exit_code) {}
  const std::string& stage() const { return stage_; }
  int exit_code() const { return exit_code_; }

 private:
  std::string stage_;
  int exit_code_;
};

struct PipelineResult {
  Arrangement arrangement;
  StageTimings timings;
  std::vector<std::filesystem::path> written;
  std::size_t out_of_range_frames = 0;
  std::size_t melody_notes = 0;
};

/// Output file names for `base` ("out" or "out.wav" -> "out.mix.wav", ...).
std::vector<std::filesystem::path> output_paths(const std::filesystem::path& base, OutputMode mode);

std::unique_ptr<NoteScorer> make_backend(const PipelineConfig& cfg);

/// Output artifacts are written only after every stage succeeded.
PipelineResult run_pipeline(const std::filesystem::path& input, const std::filesystem::path& output_base,
                            const PipelineConfig& cfg);

}  // namespace harmonizer
