#pragma once

// Completion parsing, exact-set scoring, baselines and stratified reports.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "boxtrack/lexicon.hpp"
#include "boxtrack/sampler.hpp"

namespace boxtrack {

struct ParsedBoxes {
  std::map<int, BoxContents> boxes;
  /// Set when a segment holds alphabetic tokens that are neither vocabulary
  /// nouns nor part of the statement scaffolding.
  std::map<int, bool> residual;

  bool has(int box) const { return boxes.contains(box); }
};

/// `completion` is the text that follows "<label of first_box> contains".
/// Segments are split on "Box k" / "Container K" labels; nouns are matched
/// case-insensitively as whole tokens against `vocab`.
ParsedBoxes parse_all_boxes(std::string_view completion, const Lexicon& lex, const std::vector<std::string>& vocab,
                            int first_box = 0);

/// Exact set match with no residual content.
bool score_example(const BoxContents& pred, bool residual, const BoxContents& gold);

/// Distinct objects mentioned in clauses that name the probed box (its
/// initial clause and every operation sentence naming it), in first-mention order.
BoxContents box_mention_pool(const ClozeExample& ex, const Lexicon& lex);
/// Distinct objects mentioned anywhere in the description.
BoxContents description_object_pool(const ClozeExample& ex, const Lexicon& lex);

/// k uniform in {0,1,2,3} capped at the pool size, then k objects uniformly
/// without replacement from `box_mention_pool`.
BoxContents baseline_random(const ClozeExample& ex, const Lexicon& lex, Rng& rng);
/// Same draw law over `description_object_pool`.
BoxContents baseline_full_random(const ClozeExample& ex, const Lexicon& lex, Rng& rng);
/// Contents named by the probed box's clause of the initial description.
BoxContents baseline_repeat_initial(const ClozeExample& ex, const Lexicon& lex);

/// Text a model would emit after "... contains": " the x and the y" or " nothing".
std::string completion_for(const BoxContents& objs, const Lexicon& lex);

inline constexpr double kZ95 = 1.959964;

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = kZ95);

struct ScoredExample {
  std::string key;
  ExampleMeta meta;
  bool correct = false;
};

struct StratumRow {
  int ops_affecting = 0;
  bool changed = false;
  std::size_t count = 0;
  std::size_t correct = 0;
  double accuracy = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct StratifiedReport {
  std::vector<StratumRow> rows;  // sorted by (changed, ops_affecting)
  StratumRow overall;
  std::vector<std::pair<int, bool>> omitted;  // empty strata in [0, max_ops] x {false, true}

  const StratumRow* find(int ops_affecting, bool changed) const;
  json to_json() const;
  /// ops_affecting,changed,count,correct,accuracy,ci_low,ci_high (+ an "all" row).
  std::string to_csv() const;
  /// One panel: rows of the given `changed` value only.
  std::string panel_csv(bool changed) const;
};

StratifiedReport stratify_and_report(const std::vector<ScoredExample>& scores, int max_ops = 12);

/// report.csv, report.json, panel_changed.csv, panel_unchanged.csv
void write_report(const StratifiedReport& report, const std::filesystem::path& dir);

/// Prediction record as produced by the runner and the baselines.
struct Prediction {
  std::string key;
  std::string mode;  // "per-box" | "all-boxes"
  std::string completion;
  std::string status = "ok";
  std::string error;
};

Prediction prediction_from_json(const json& j);
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

struct ScoringResult {
  std::vector<ScoredExample> scored;
  std::size_t missing = 0;  // examples with no prediction record
  std::size_t errored = 0;  // prediction status != ok
  std::size_t residual = 0;
};

/// Joins predictions to examples by key (per-box) or state key (all-boxes)
/// and scores every example. Vocabulary is the lexicon's noun list.
ScoringResult score_predictions(const std::vector<ClozeExample>& examples, const std::vector<Prediction>& preds,
                                const Lexicon& lex);

enum class BaselineKind { Random, RepeatInitial, FullRandom };
BaselineKind baseline_kind_from_string(std::string_view text);

/// Per-box predictions for every example. Example i draws from
/// Rng(derive_seed(seed, i)), so output is independent of batching.
std::vector<Prediction> run_baseline(const std::vector<ClozeExample>& examples, BaselineKind kind, const Lexicon& lex,
                                     std::uint64_t seed);
json prediction_to_json(const Prediction& p);

/// Monte-Carlo accuracy of the random baseline per (ops_affecting, changed)
/// stratum. Every stratum receives at least `min_draws_per_stratum` draws,
/// spread evenly over its examples.
std::map<std::pair<int, bool>, double> random_baseline_stratum_accuracy(const std::vector<ClozeExample>& examples,
                                                                        const Lexicon& lex, std::uint64_t seed,
                                                                        std::size_t min_draws_per_stratum);

}  // namespace boxtrack
