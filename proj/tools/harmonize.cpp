// harmonize: four-part vocal harmonizer.
//
//   harmonize input.wav -o out [--backend rulebook|markov|external|uniform]
//             [--delta 5.0] [--seed N] [--temperature T] [--top-p P]
//             [--stems] [--midi out.mid] [--bench] [--debug-dir DIR]
//             [--external-cmd CMD | --external-addr HOST:PORT]
//
// Exit codes: 0 ok, 2 bad arguments, 3 I/O error, 4 pipeline stage failure.

#include <csignal>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "harmonizer/pipeline.h"

int main(int argc, char** argv) {
  using namespace harmonizer;
  std::signal(SIGPIPE, SIG_IGN);

  CLI::App app{"Generate and sing a four-part harmony for a monophonic vocal recording"};
  app.set_config("--config", "", "key = value config file; command-line flags take precedence");

  std::string input;
  std::string output;
  std::string backend = "rulebook";
  std::string output_mode = "mix";
  std::string midi_out;
  std::string debug_dir;
  std::string markov_model;
  std::string external_cmd;
  std::string external_addr;
  PipelineConfig cfg;
  bool stems = false;
  bool greedy = false;
  bool no_consonants = false;

  app.add_option("input", input, "Input WAV file")->required();
  app.add_option("-o,--output", output, "Output path prefix (writes <out>.mix.wav, ...)")->required();
  app.add_option("--backend", backend, "Note scorer: rulebook, markov, external or uniform")
      ->check(CLI::IsMember({"rulebook", "markov", "external", "uniform"}));
  app.add_option("--delta", cfg.delta, "Anticipation interval in seconds")->capture_default_str();
  app.add_option("--seed", cfg.sampler.seed, "Sampling seed")->capture_default_str();
  app.add_option("--temperature", cfg.sampler.temperature, "Softmax temperature (0 = greedy)")->capture_default_str();
  app.add_option("--top-p", cfg.sampler.top_p, "Nucleus sampling mass")->capture_default_str();
  app.add_flag("--greedy", greedy, "Argmax decoding (same as --temperature 0)");
  app.add_option("--output-mode", output_mode, "mix, stems or both")
      ->check(CLI::IsMember({"mix", "stems", "both"}));
  app.add_flag("--stems", stems, "Also write per-voice stems (same as --output-mode both)");
  app.add_option("--midi", midi_out, "Export the arrangement as a Standard MIDI File");
  app.add_flag("--bench", cfg.bench, "Print per-stage timings as JSON on stdout");
  app.add_option("--debug-dir", debug_dir, "Directory for intermediate artifacts");
  app.add_option("--markov-model", markov_model, "Markov table produced by train_markov");
  auto* cmd_opt = app.add_option("--external-cmd", external_cmd, "Command speaking the bridge protocol on stdio");
  auto* addr_opt = app.add_option("--external-addr", external_addr, "HOST:PORT of a bridge server");
  cmd_opt->excludes(addr_opt);
  app.add_flag("--no-consonants", no_consonants, "Do not copy unvoiced consonants into harmony stems");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    cfg.backend = parse_backend(backend);
    cfg.output = stems ? OutputMode::Both : parse_output_mode(output_mode);
    if (greedy) cfg.sampler.temperature = 0.0;
    if (!midi_out.empty()) cfg.midi_out = midi_out;
    if (!debug_dir.empty()) cfg.debug_dir = debug_dir;
    cfg.markov_model = markov_model;
    cfg.external_cmd = external_cmd;
    cfg.external_addr = external_addr;
    cfg.synth.consonant_passthrough = !no_consonants;
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    const PipelineResult result = run_pipeline(input, output, cfg);
    if (cfg.bench) std::cout << result.timings.to_json() << '\n';
    if (result.out_of_range_frames > 0) {
      std::cerr << "note: " << result.out_of_range_frames << " shifted f0 frames fell outside 20-4000 Hz and were muted\n";
    }
    for (const auto& p : result.written) std::cerr << "wrote " << p.string() << '\n';
  } catch (const PipelineError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
