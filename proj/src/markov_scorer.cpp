#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "harmonizer/errors.h"
#include "harmonizer/midi_file.h"
#include "harmonizer/scorers.h"

namespace harmonizer {
namespace {

constexpr const char* kFormatName = "harmonizer-markov";
constexpr int kFormatVersion = 1;

bool offset_in_vocabulary(int offset) {
  return offset >= MarkovModel::kMinOffset && offset <= MarkovModel::kMaxOffset;
}

// Pitch of the note of `line` sounding at `time` (seconds), if any.
std::optional<int> sounding_at(const std::vector<MidiNote>& line, double time) {
  constexpr double kEps = 1e-6;
  for (const auto& n : line) {
    if (n.start <= time + kEps && time + kEps < n.end) return n.pitch;
  }
  return std::nullopt;
}

void count_file(const MidiFileInfo& info, MarkovModel& model) {
  std::array<std::vector<MidiNote>, kVoiceCount> lines;
  for (const auto& n : info.notes) {
    if (n.program >= 0 && n.program < kVoiceCount) lines[static_cast<std::size_t>(n.program)].push_back(n);
  }

  std::array<int, kVoiceCount> prev{};
  prev.fill(MarkovModel::kStartOffset);
  double last_onset = -1.0;
  for (const auto& melody : lines[0]) {
    if (melody.start == last_onset) continue;  // chords in the soprano track: keep the first note
    last_onset = melody.start;

    std::array<std::optional<int>, kVoiceCount> chord;
    bool complete = true;
    for (Voice v : kHarmonyVoices) {
      chord[voice_index(v)] = sounding_at(lines[voice_index(v)], melody.start);
      complete = complete && chord[voice_index(v)].has_value();
    }
    if (!complete) {
      prev.fill(MarkovModel::kStartOffset);
      continue;
    }
    for (Voice v : kHarmonyVoices) {
      const int offset = *chord[voice_index(v)] - melody.pitch;
      int& p = prev[voice_index(v)];
      if (!offset_in_vocabulary(offset)) {
        p = MarkovModel::kStartOffset;
        continue;
      }
      model.add(melody.pitch % 12, v, p, offset);
      p = offset;
    }
  }
}

}  // namespace

void MarkovModel::add(int melody_pc, Voice voice, int prev_offset, int offset, std::uint64_t n) {
  const Context ctx{melody_pc, voice_index(voice), prev_offset};
  counts_[ctx][offset] += n;
  totals_[ctx] += n;
}

std::uint64_t MarkovModel::count(int melody_pc, Voice voice, int prev_offset, int offset) const {
  auto it = counts_.find({melody_pc, voice_index(voice), prev_offset});
  if (it == counts_.end()) return 0;
  auto jt = it->second.find(offset);
  return jt == it->second.end() ? 0 : jt->second;
}

std::uint64_t MarkovModel::total(int melody_pc, Voice voice, int prev_offset) const {
  auto it = totals_.find({melody_pc, voice_index(voice), prev_offset});
  return it == totals_.end() ? 0 : it->second;
}

double MarkovModel::probability(int melody_pc, Voice voice, int prev_offset, int offset) const {
  const double c = offset_in_vocabulary(offset) ? static_cast<double>(count(melody_pc, voice, prev_offset, offset)) : 0.0;
  return (c + 1.0) / (static_cast<double>(total(melody_pc, voice, prev_offset)) + kVocabulary);
}

std::string MarkovModel::to_json() const {
  nlohmann::ordered_json j;
  j["format"] = kFormatName;
  j["version"] = kFormatVersion;
  j["offset_min"] = kMinOffset;
  j["offset_max"] = kMaxOffset;
  j["start_offset"] = kStartOffset;
  auto entries = nlohmann::json::array();
  for (const auto& [ctx, outcomes] : counts_) {
    for (const auto& [offset, n] : outcomes) {
      entries.push_back({std::get<0>(ctx), std::get<1>(ctx), std::get<2>(ctx), offset, n});
    }
  }
  j["entries"] = std::move(entries);
  return j.dump(1);
}

MarkovModel MarkovModel::from_json(const std::string& text) {
  MarkovModel m;
  try {
    auto j = nlohmann::json::parse(text);
    if (j.at("format") != kFormatName) throw FormatError("markov model: wrong format tag");
    if (j.at("version") != kFormatVersion) throw FormatError("markov model: unsupported version");
    if (j.at("offset_min") != kMinOffset || j.at("offset_max") != kMaxOffset ||
        j.at("start_offset") != kStartOffset) {
      throw FormatError("markov model: offset vocabulary mismatch");
    }
    for (const auto& e : j.at("entries")) {
      const int pc = e.at(0).get<int>();
      const int voice = e.at(1).get<int>();
      const int prev = e.at(2).get<int>();
      const int offset = e.at(3).get<int>();
      const auto n = e.at(4).get<std::uint64_t>();
      if (pc < 0 || pc > 11 || voice < 1 || voice > 3 || !offset_in_vocabulary(offset) ||
          (prev != kStartOffset && !offset_in_vocabulary(prev)) || n == 0) {
        throw FormatError("markov model: entry out of range");
      }
      m.add(pc, static_cast<Voice>(voice), prev, offset, n);
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("markov model: ") + e.what());
  }
  return m;
}

void MarkovModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

MarkovModel MarkovModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open markov model " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

MarkovModel train_markov(const std::filesystem::path& corpus_dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(corpus_dir, ec)) {
    throw std::runtime_error("train_markov: not a directory: " + corpus_dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(corpus_dir)) {
    if (!entry.is_regular_file()) continue;
    auto ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".mid" || ext == ".midi") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  MarkovModel model;
  std::size_t used = 0;
  for (const auto& f : files) {
    MidiFileInfo info;
    try {
      info = read_midi(f);
    } catch (const FormatError&) {
      continue;
    }
    std::array<bool, kVoiceCount> present{};
    for (const auto& n : info.notes) {
      if (n.program >= 0 && n.program < kVoiceCount) present[static_cast<std::size_t>(n.program)] = true;
    }
    if (info.track_count < kVoiceCount || !std::all_of(present.begin(), present.end(), [](bool b) { return b; })) {
      continue;
    }
    count_file(info, model);
    ++used;
  }
  if (used == 0) throw std::runtime_error("train_markov: no valid four-voice MIDI files in " + corpus_dir.string());
  return model;
}

std::vector<double> MarkovScorer::score(const ScoringContext& ctx, std::span<const int> candidates) {
  const int melody_pitch = ctx.melody[ctx.step].pitch;
  int prev = MarkovModel::kStartOffset;
  if (ctx.step > 0) {
    const auto p = ctx.pitch_at(ctx.voice, ctx.step - 1);
    const int off = *p - ctx.melody[ctx.step - 1].pitch;
    if (off >= MarkovModel::kMinOffset && off <= MarkovModel::kMaxOffset) prev = off;
  }
  std::vector<double> out;
  out.reserve(candidates.size());
  for (int c : candidates) {
    out.push_back(std::log(model_->probability(melody_pitch % 12, ctx.voice, prev, c - melody_pitch)));
  }
  return out;
}

}  // namespace harmonizer
