#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "boxtrack/assets.hpp"
#include "boxtrack/lexicon.hpp"
#include "boxtrack/sampler.hpp"
#include "boxtrack/scenario_io.hpp"
#include "boxtrack/splitter.hpp"

namespace fixtures {

inline boxtrack::Scenario load(std::string_view asset_name) {
  return boxtrack::scenario_from_json(boxtrack::json::parse(boxtrack::asset_lines(asset_name).at(0)),
                                      boxtrack::fixture_config());
}

inline boxtrack::Scenario worked_example() { return load("demos/worked_example.jsonl"); }

inline boxtrack::Lexicon lexicon_for(const boxtrack::Scenario& sc) {
  std::vector<std::string> nouns;
  for (const auto& b : sc.initial.boxes()) nouns.insert(nouns.end(), b.begin(), b.end());
  for (const auto& op : sc.ops) nouns.insert(nouns.end(), op.objects().begin(), op.objects().end());
  std::sort(nouns.begin(), nouns.end());
  nouns.erase(std::unique(nouns.begin(), nouns.end()), nouns.end());
  return boxtrack::Lexicon::custom("fixture", boxtrack::SurfaceForm::Base, nouns);
}

inline boxtrack::WorldConfig default_config() {
  boxtrack::WorldConfig cfg;
  cfg.objects = boxtrack::bnc_nouns();
  return cfg;
}

// The default 2200-scenario corpus, generated once per test process.
inline const std::vector<boxtrack::Scenario>& default_corpus() {
  static const auto corpus = boxtrack::generate_corpus(default_config(), 2200, 20230105);
  return corpus;
}

// Unique scratch directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("boxtrack-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixtures
