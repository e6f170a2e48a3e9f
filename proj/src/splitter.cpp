#include "boxtrack/splitter.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "boxtrack/assets.hpp"
#include "boxtrack/errors.hpp"
#include "boxtrack/sampler.hpp"
#include "boxtrack/scenario_io.hpp"

namespace boxtrack {

namespace {

struct Group {
  std::string signature;
  std::vector<std::size_t> members;
};

// Subset of `candidates` (indices into groups) whose sizes sum to `target`,
// or nullopt. Plain 0/1 subset-sum table.
std::optional<std::vector<std::size_t>> exact_subset(const std::vector<Group>& groups,
                                                     const std::vector<std::size_t>& candidates, int target) {
  const std::size_t g = candidates.size();
  const auto cols = static_cast<std::size_t>(target) + 1;
  std::vector<std::vector<bool>> reach(g + 1, std::vector<bool>(cols, false));
  reach[0][0] = true;
  for (std::size_t i = 0; i < g; ++i) {
    const std::size_t size = groups[candidates[i]].members.size();
    for (std::size_t s = 0; s < cols; ++s) {
      reach[i + 1][s] = reach[i][s] || (s >= size && reach[i][s - size]);
    }
  }
  if (!reach[g][static_cast<std::size_t>(target)]) return std::nullopt;
  std::vector<std::size_t> picked;
  std::size_t s = static_cast<std::size_t>(target);
  for (std::size_t i = g; i > 0; --i) {
    if (!reach[i - 1][s]) {
      picked.push_back(candidates[i - 1]);
      s -= groups[candidates[i - 1]].members.size();
    }
  }
  return picked;
}

std::vector<ClozeExample> render_side(const std::vector<Scenario>& corpus, const std::vector<std::size_t>& indices,
                                      const Lexicon& lex, std::optional<int> max_t, const WorldConfig& cfg) {
  const bool translate = lex.nouns() != cfg.objects;
  std::vector<ClozeExample> out;
  for (auto i : indices) {
    const Scenario& sc = corpus[i];
    auto examples = translate ? build_cloze_examples(translate_nouns(sc, cfg.objects, lex.nouns(), cfg), lex, max_t)
                              : build_cloze_examples(sc, lex, max_t);
    out.insert(out.end(), std::make_move_iterator(examples.begin()), std::make_move_iterator(examples.end()));
  }
  return out;
}

std::vector<std::string> descriptions_of(const std::vector<ClozeExample>& examples) {
  std::vector<std::string> out;
  std::unordered_set<std::string> seen;
  for (const auto& ex : examples) {
    if (seen.insert(ex.state_key()).second) out.push_back(ex.description);
  }
  return out;
}

std::vector<const Scenario*> pick(const std::vector<Scenario>& corpus, const std::vector<std::size_t>& idx) {
  std::vector<const Scenario*> out;
  for (auto i : idx) out.push_back(&corpus[i]);
  return out;
}

Scenario load_fixture(std::string_view name) {
  auto lines = asset_lines(name);
  return scenario_from_json(json::parse(lines.at(0)), fixture_config());
}

std::vector<std::string> nouns_of(const Scenario& sc) {
  std::vector<std::string> out;
  for (const auto& b : sc.initial.boxes()) out.insert(out.end(), b.begin(), b.end());
  for (const auto& op : sc.ops) {
    for (const auto& o : op.objects()) {
      if (std::find(out.begin(), out.end(), o) == out.end()) out.push_back(o);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(SplitKind kind) noexcept {
  switch (kind) {
    case SplitKind::Base:
      return "base";
    case SplitKind::NumOps:
      return "numops";
    case SplitKind::Vocab:
      return "vocab";
    case SplitKind::AltForm:
      return "altform";
    case SplitKind::AltFormNumOps:
      return "altform-numops";
  }
  return "?";
}

SplitKind split_kind_from_string(std::string_view text) {
  for (auto k : {SplitKind::Base, SplitKind::NumOps, SplitKind::Vocab, SplitKind::AltForm, SplitKind::AltFormNumOps}) {
    if (text == to_string(k)) return k;
  }
  throw ConfigError("unknown split kind '" + std::string(text) +
                    "' (expected base, numops, vocab, altform, altform-numops)");
}

SplitSpec SplitSpec::for_kind(SplitKind kind, SplitRatios ratios) {
  SplitSpec spec;
  spec.kind = kind;
  spec.ratios = ratios;
  switch (kind) {
    case SplitKind::Base:
      break;
    case SplitKind::NumOps:
      spec.max_train_t = 2;
      break;
    case SplitKind::Vocab:
      spec.train_lexicon = "rare";
      break;
    case SplitKind::AltForm:
      spec.train_lexicon = "altform";
      break;
    case SplitKind::AltFormNumOps:
      spec.train_lexicon = "altform";
      spec.max_train_t = 2;
      break;
  }
  return spec;
}

Partition partition_by_signature(const std::vector<Scenario>& scenarios, SplitRatios ratios, std::uint64_t seed) {
  if (ratios.train < 0 || ratios.dev < 0 || ratios.test < 0) throw PartitionError("split sizes must be non-negative");
  if (static_cast<std::size_t>(ratios.total()) != scenarios.size()) {
    throw PartitionError("split sizes sum to " + std::to_string(ratios.total()) + " but the corpus has " +
                         std::to_string(scenarios.size()) + " scenarios");
  }

  std::vector<Group> groups;
  {
    std::unordered_map<std::string, std::size_t> where;
    for (std::size_t i = 0; i < scenarios.size(); ++i) {
      auto [it, fresh] = where.emplace(scenarios[i].signature, groups.size());
      if (fresh) groups.push_back({scenarios[i].signature, {}});
      groups[it->second].members.push_back(i);
    }
  }
  Rng rng(seed);
  rng.shuffle(groups);
  std::stable_sort(groups.begin(), groups.end(),
                   [](const Group& a, const Group& b) { return a.members.size() > b.members.size(); });

  const std::array<int, 3> targets{ratios.train, ratios.dev, ratios.test};
  const int biggest_target = *std::max_element(targets.begin(), targets.end());
  if (!groups.empty() && static_cast<int>(groups.front().members.size()) > biggest_target) {
    throw PartitionError("signature group " + groups.front().signature + " has " +
                         std::to_string(groups.front().members.size()) +
                         " scenarios, more than any split target allows");
  }

  // Greedy: largest group first, into the split with the largest remaining deficit that can hold it.
  std::array<std::vector<std::size_t>, 3> assigned;  // group indices
  std::array<int, 3> filled{0, 0, 0};
  bool stuck = false;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const int size = static_cast<int>(groups[g].members.size());
    int best = -1;
    for (int s = 0; s < 3; ++s) {
      const int deficit = targets[static_cast<std::size_t>(s)] - filled[static_cast<std::size_t>(s)];
      if (deficit >= size && (best < 0 || deficit > targets[static_cast<std::size_t>(best)] -
                                                         filled[static_cast<std::size_t>(best)])) {
        best = s;
      }
    }
    if (best < 0) {
      stuck = true;
      break;
    }
    assigned[static_cast<std::size_t>(best)].push_back(g);
    filled[static_cast<std::size_t>(best)] += size;
  }

  if (stuck) {
    // Exact fallback: choose test, then dev, by subset sum; train takes the rest.
    std::vector<std::size_t> all(groups.size());
    std::iota(all.begin(), all.end(), 0);
    bool solved = false;
    for (auto order : {std::array<int, 2>{2, 1}, std::array<int, 2>{1, 2}}) {
      auto first = exact_subset(groups, all, targets[static_cast<std::size_t>(order[0])]);
      if (!first) continue;
      std::unordered_set<std::size_t> used(first->begin(), first->end());
      std::vector<std::size_t> rest;
      for (auto g : all) {
        if (!used.contains(g)) rest.push_back(g);
      }
      auto second = exact_subset(groups, rest, targets[static_cast<std::size_t>(order[1])]);
      if (!second) continue;
      used.insert(second->begin(), second->end());
      assigned = {};
      assigned[static_cast<std::size_t>(order[0])] = *first;
      assigned[static_cast<std::size_t>(order[1])] = *second;
      for (auto g : all) {
        if (!used.contains(g)) assigned[0].push_back(g);
      }
      solved = true;
      break;
    }
    if (!solved) {
      throw PartitionError("no assignment of whole signature groups reaches the exact split sizes (largest group " +
                           groups.front().signature + ", " + std::to_string(groups.front().members.size()) +
                           " scenarios)");
    }
  }

  std::array<std::vector<std::size_t>, 3> out;
  for (std::size_t s = 0; s < 3; ++s) {
    for (auto g : assigned[s]) out[s].insert(out[s].end(), groups[g].members.begin(), groups[g].members.end());
    std::sort(out[s].begin(), out[s].end());
  }
  return {std::move(out[0]), std::move(out[1]), std::move(out[2])};
}

SplitExamples build_split(const SplitSpec& spec, const std::vector<Scenario>& corpus, const Partition& partition,
                          const WorldConfig& cfg) {
  const Lexicon train_lex = Lexicon::by_name(spec.train_lexicon);
  const Lexicon test_lex = Lexicon::by_name(spec.test_lexicon);
  SplitExamples out;
  out.train = render_side(corpus, partition.train, train_lex, spec.max_train_t, cfg);
  out.dev = render_side(corpus, partition.dev, train_lex, std::nullopt, cfg);
  out.test = render_side(corpus, partition.test, test_lex, std::nullopt, cfg);
  return out;
}

std::set<std::string> shared_signatures(const std::vector<const Scenario*>& a, const std::vector<const Scenario*>& b) {
  std::set<std::string> sa, shared;
  for (const auto* s : a) sa.insert(s->signature);
  for (const auto* s : b) {
    if (sa.contains(s->signature)) shared.insert(s->signature);
  }
  return shared;
}

const std::set<std::string>& allowed_shared_tokens() {
  static const std::set<std::string> allowed{"the", "into", "and"};
  return allowed;
}

OverlapAudit lexical_overlap(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             const std::set<std::string>* restrict_to) {
  auto collect = [&](const std::vector<std::string>& texts) {
    std::unordered_set<std::string> toks;
    for (const auto& t : texts) {
      for (auto& tok : tokenize(t)) {
        if (!restrict_to || restrict_to->contains(tok)) toks.insert(std::move(tok));
      }
    }
    return toks;
  };
  const auto ta = collect(a);
  const auto tb = collect(b);
  OverlapAudit audit;
  for (const auto& tok : ta) {
    if (tb.contains(tok)) {
      audit.overlap.insert(tok);
      if (!allowed_shared_tokens().contains(tok)) audit.disallowed.insert(tok);
    }
  }
  return audit;
}

json split_manifest(const SplitSpec& spec, const std::vector<Scenario>& corpus, const Partition& partition,
                    const SplitExamples& examples) {
  auto ids = [&](const std::vector<std::size_t>& idx) {
    json arr = json::array();
    for (auto i : idx) arr.push_back(corpus[i].id);
    return arr;
  };
  const auto tr = pick(corpus, partition.train);
  const auto dv = pick(corpus, partition.dev);
  const auto te = pick(corpus, partition.test);
  std::set<std::string> shared;
  for (const auto& s : shared_signatures(tr, dv)) shared.insert(s);
  for (const auto& s : shared_signatures(tr, te)) shared.insert(s);
  for (const auto& s : shared_signatures(dv, te)) shared.insert(s);

  json j;
  j["kind"] = std::string(to_string(spec.kind));
  j["train_lexicon"] = spec.train_lexicon;
  j["test_lexicon"] = spec.test_lexicon;
  j["max_train_t"] = spec.max_train_t ? json(*spec.max_train_t) : json(nullptr);
  j["counts"] = {{"scenarios", {{"train", partition.train.size()}, {"dev", partition.dev.size()},
                                {"test", partition.test.size()}}},
                 {"examples", {{"train", examples.train.size()}, {"dev", examples.dev.size()},
                               {"test", examples.test.size()}}}};
  j["scenario_ids"] = {{"train", ids(partition.train)}, {"dev", ids(partition.dev)}, {"test", ids(partition.test)}};
  j["audit"]["signature_disjoint"] = shared.empty();
  j["audit"]["shared_signatures"] = shared;
  if (spec.train_lexicon != spec.test_lexicon) {
    const Lexicon train_lex = Lexicon::by_name(spec.train_lexicon);
    const Lexicon test_lex = Lexicon::by_name(spec.test_lexicon);
    std::set<std::string> nouns(train_lex.nouns().begin(), train_lex.nouns().end());
    nouns.insert(test_lex.nouns().begin(), test_lex.nouns().end());
    const bool same_form = train_lex.form() == test_lex.form();
    const auto audit = lexical_overlap(descriptions_of(examples.train), descriptions_of(examples.test),
                                       same_form ? &nouns : nullptr);
    j["audit"]["lexical"] = {{"compared", same_form ? "object nouns" : "all tokens"},
                             {"overlap", audit.overlap},
                             {"disallowed", audit.disallowed},
                             {"ok", audit.ok()}};
  }
  return j;
}

json write_split(const std::filesystem::path& dir, const SplitSpec& spec, const std::vector<Scenario>& corpus,
                 const Partition& partition, const SplitExamples& examples) {
  write_examples(dir / "train.jsonl", examples.train);
  write_examples(dir / "dev.jsonl", examples.dev);
  write_examples(dir / "test.jsonl", examples.test);
  json manifest = split_manifest(spec, corpus, partition, examples);
  write_text_file(dir / "manifest.json", manifest.dump(2) + "\n");
  return manifest;
}

Subsample build_subsample(const std::vector<ClozeExample>& test_examples, int per_stratum, std::uint64_t seed) {
  std::vector<std::string> states;  // first-appearance order
  std::unordered_map<std::string, std::size_t> state_index;
  std::map<int, std::vector<std::size_t>> by_ops;  // ops value -> states having it
  std::vector<std::set<int>> state_ops;
  for (const auto& ex : test_examples) {
    auto [it, fresh] = state_index.emplace(ex.state_key(), states.size());
    if (fresh) {
      states.push_back(ex.state_key());
      state_ops.emplace_back();
    }
    if (state_ops[it->second].insert(ex.meta.ops_affecting).second) by_ops[ex.meta.ops_affecting].push_back(it->second);
  }

  std::set<std::size_t> chosen;
  for (const auto& [ops, candidates] : by_ops) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(ops)));
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(std::max(per_stratum, 0)), candidates.size());
    for (auto i : rng.choose(candidates.size(), k)) chosen.insert(candidates[i]);
  }

  Subsample out;
  std::unordered_set<std::string> scenarios;
  for (auto s : chosen) out.state_keys.push_back(states[s]);
  for (const auto& ex : test_examples) {
    if (chosen.contains(state_index.at(ex.state_key()))) {
      out.examples.push_back(ex);
      scenarios.insert(ex.scenario_id);
    }
  }
  out.scenarios = scenarios.size();
  return out;
}

Demonstration build_demo(const Scenario& scenario, const Lexicon& lex) {
  Demonstration demo;
  demo.scenario_id = scenario.id;
  demo.prefix_lengths = {0, std::min(6, scenario.num_ops())};
  const auto all = build_cloze_examples(scenario, lex);
  for (int t : demo.prefix_lengths) {
    demo.descriptions.push_back(render_description(scenario, t, lex));
    demo.statements.push_back(render_statement(scenario.states[static_cast<std::size_t>(t)], lex));
    for (const auto& ex : all) {
      if (ex.t == t) demo.examples.push_back(ex);
    }
  }
  return demo;
}

WorldConfig fixture_config() {
  WorldConfig cfg;
  cfg.arity.remove_max = cfg.m;
  return cfg;
}

Scenario demo_scenario_matched() { return load_fixture("demos/matched_demo.jsonl"); }
Scenario demo_scenario_altform() { return load_fixture("demos/altform_demo.jsonl"); }

Lexicon demo_lexicon_matched() {
  return Lexicon::custom("demo-matched", SurfaceForm::Base, nouns_of(demo_scenario_matched()));
}

Lexicon demo_lexicon_altform() {
  return Lexicon::custom("demo-altform", SurfaceForm::AltForm, nouns_of(demo_scenario_altform()));
}

}  // namespace boxtrack
