// train_markov: count voice transitions in a directory of four-voice MIDI
// chorales (programs 0-3 = S, A, T, B) and write the Markov table.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "harmonizer/errors.h"
#include "harmonizer/scorers.h"

int main(int argc, char** argv) {
  CLI::App app{"Train the Markov harmony backend"};
  std::string corpus;
  std::string out;
  app.add_option("corpus", corpus, "Directory of .mid files")->required();
  app.add_option("-o,--output", out, "Model file to write")->required();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const auto model = harmonizer::train_markov(corpus);
    model.save(out);
    std::cerr << "wrote " << out << " (" << model.context_count() << " contexts)\n";
  } catch (const harmonizer::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
