#pragma once

// Train/dev/test construction with signature disjointness, the evaluation
// subsample, demonstrations, and the audits that back them.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "boxtrack/lexicon.hpp"
#include "boxtrack/world.hpp"

namespace boxtrack {

enum class SplitKind { Base, NumOps, Vocab, AltForm, AltFormNumOps };

std::string_view to_string(SplitKind kind) noexcept;
/// base | numops | vocab | altform | altform-numops. Throws ConfigError.
SplitKind split_kind_from_string(std::string_view text);

struct SplitRatios {
  int train = 990;
  int dev = 220;
  int test = 990;

  int total() const noexcept { return train + dev + test; }
};

struct SplitSpec {
  SplitKind kind = SplitKind::Base;
  SplitRatios ratios;
  std::optional<int> max_train_t;
  std::string train_lexicon = "base";
  std::string test_lexicon = "base";

  static SplitSpec for_kind(SplitKind kind, SplitRatios ratios = {});
};

/// Indices into the corpus, ascending within each split.
struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> dev;
  std::vector<std::size_t> test;
};

/// Whole signature groups go to one split; exact target counts. Throws
/// PartitionError when no exact assignment exists.
Partition partition_by_signature(const std::vector<Scenario>& scenarios, SplitRatios ratios, std::uint64_t seed);

struct SplitExamples {
  std::vector<ClozeExample> train;
  std::vector<ClozeExample> dev;
  std::vector<ClozeExample> test;
};

/// Dev is rendered like train but with every prefix length.
SplitExamples build_split(const SplitSpec& spec, const std::vector<Scenario>& corpus, const Partition& partition,
                          const WorldConfig& cfg);

/// Signatures present in both sets of scenarios.
std::set<std::string> shared_signatures(const std::vector<const Scenario*>& a, const std::vector<const Scenario*>& b);

/// Tokens allowed in the overlap of two lexically disjoint renderings: the
/// determiner, the preposition, and the list conjunction.
const std::set<std::string>& allowed_shared_tokens();

struct OverlapAudit {
  std::set<std::string> overlap;     // every shared token
  std::set<std::string> disallowed;  // overlap minus allowed_shared_tokens()
  bool ok() const noexcept { return disallowed.empty(); }
};

/// Token overlap between two sets of texts. With `restrict_to` given, only
/// tokens in that set are compared (object nouns for the Vocab split).
OverlapAudit lexical_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const std::set<std::string>* restrict_to = nullptr);

json split_manifest(const SplitSpec& spec, const std::vector<Scenario>& corpus, const Partition& partition,
                    const SplitExamples& examples);

/// train.jsonl, dev.jsonl, test.jsonl and manifest.json under `dir`.
json write_split(const std::filesystem::path& dir, const SplitSpec& spec, const std::vector<Scenario>& corpus,
                 const Partition& partition, const SplitExamples& examples);

struct Subsample {
  std::vector<ClozeExample> examples;
  std::vector<std::string> state_keys;  // chosen "<scenario>:<t>" states
  std::size_t scenarios = 0;
};

/// For each ops_affecting value n present, up to `per_stratum` description
/// states (scenario, t) having at least one box with n operations are chosen
/// uniformly; every box example of a chosen state is kept.
Subsample build_subsample(const std::vector<ClozeExample>& test_examples, int per_stratum, std::uint64_t seed);

struct Demonstration {
  std::string scenario_id;
  std::vector<int> prefix_lengths;  // {0, 6}
  std::vector<std::string> descriptions;
  std::vector<std::string> statements;
  std::vector<ClozeExample> examples;
};

/// Two demonstrations (t = 0 and t = 6) with all-box statements.
Demonstration build_demo(const Scenario& scenario, const Lexicon& lex);

/// Bundled demonstration scenarios of the matched and AltForm prompts, with
/// lexicons holding exactly their nouns.
Scenario demo_scenario_matched();
Scenario demo_scenario_altform();
Lexicon demo_lexicon_matched();
Lexicon demo_lexicon_altform();

/// Config used for fixture scenarios: defaults with the fixture's nouns.
WorldConfig fixture_config();

}  // namespace boxtrack
