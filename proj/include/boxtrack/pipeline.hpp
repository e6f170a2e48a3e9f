#pragma once

// Configuration, end-to-end orchestration and dataset validation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "boxtrack/prompt.hpp"
#include "boxtrack/runner.hpp"
#include "boxtrack/splitter.hpp"
#include "boxtrack/world.hpp"

namespace boxtrack {

inline constexpr std::string_view kVersion = "0.1.0";

/// Everything a pipeline run depends on. Serialized into every manifest.
struct RunConfig {
  WorldConfig world;
  std::string nouns = "bnc";  // bnc | rare | path to a one-noun-per-line file

  int count = 2200;
  std::uint64_t seed = 20230105;

  /// base | numops | vocab | altform | altform-numops | demo
  std::string split_kind = "base";
  SplitRatios ratios;
  std::optional<std::uint64_t> split_seed;
  int subsample_per_stratum = 0;  // 0 keeps the whole test split

  PromptSpec prompt;
  /// Empty: no model run. "mock:gold" / "mock:repeat-initial" start an
  /// in-process scripted endpoint; anything else is an HTTP base URL.
  std::string endpoint;
  DecodeParams decode;
  int parallel = 4;
  int max_attempts = 5;
  std::string cache_dir;

  std::vector<std::string> baselines;  // random | repeat-initial | full-random
  std::optional<std::uint64_t> baseline_seed;

  std::filesystem::path out_dir = "artifacts";

  std::uint64_t effective_split_seed() const;
  std::uint64_t effective_subsample_seed() const;
  std::uint64_t effective_baseline_seed() const;

  json to_json() const;
};

/// Parses TOML text. `overrides` are "section.key=value" strings applied on
/// top (value in TOML syntax; bare words are taken as strings). Throws
/// ConfigError for unknown keys and invalid values.
RunConfig parse_run_config(const std::string& toml_text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Resolves the configured noun list.
std::vector<std::string> load_nouns(const std::string& spec);

struct CheckResult {
  explicit CheckResult(std::string check_name = {}) : name(std::move(check_name)) {}

  std::string name;
  bool ok = true;
  std::size_t checked = 0;
  std::vector<std::string> failures;  // capped at 50 entries
  std::size_t failure_count = 0;

  void fail(std::string message);
};

struct AuditReport {
  std::vector<CheckResult> checks;

  bool ok() const;
  json to_json() const;
  std::string to_text() const;
};

/// Audits a scenario file and any number of split directories (each holding
/// train/dev/test.jsonl and manifest.json written by `write_split`).
AuditReport validate_dataset(const std::filesystem::path& scenarios_file,
                             const std::vector<std::filesystem::path>& split_dirs, const WorldConfig& cfg);

/// Locates scenarios.jsonl and split/* under an artifact directory.
AuditReport validate_artifact_dir(const std::filesystem::path& dir, const WorldConfig& cfg);

/// generate -> split -> render -> (prompt -> run -> score | baseline -> score).
/// Writes <out_dir>/manifest.json and returns it. On a stage error the
/// manifest records the failed stage and the error is rethrown.
json run_pipeline(const RunConfig& cfg);

/// Scripted completions for every prompt: the gold statement, or the
/// initial-state statement for "repeat-initial".
std::unordered_map<std::string, std::string> scripted_completions(const std::vector<PromptRecord>& prompts,
                                                                  const std::vector<ClozeExample>& examples,
                                                                  const Lexicon& lex, std::string_view behaviour);

}  // namespace boxtrack
