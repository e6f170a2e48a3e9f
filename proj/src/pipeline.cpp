#include "boxtrack/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "boxtrack/errors.hpp"
#include "boxtrack/mock_server.hpp"
#include "boxtrack/sampler.hpp"
#include "boxtrack/scenario_io.hpp"
#include "boxtrack/scorer.hpp"
#include "toml.hpp"

namespace boxtrack {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSplitStream = 1001;
constexpr std::uint64_t kSubsampleStream = 1002;
constexpr std::uint64_t kBaselineStream = 1003;

constexpr std::size_t kMaxListedFailures = 50;

std::string where(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

template <class T>
T need(const toml::node& node, std::string_view section, std::string_view key) {
  auto v = node.value<T>();
  if (!v) throw ConfigError("config key " + where(section, key) + " has the wrong type");
  return *v;
}

int need_int(const toml::node& node, std::string_view section, std::string_view key) {
  auto v = need<std::int64_t>(node, section, key);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    throw ConfigError("config key " + where(section, key) + " is out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t need_seed(const toml::node& node, std::string_view section, std::string_view key) {
  // TOML integers are signed 64-bit; larger seeds may be given as strings.
  if (auto s = node.value_exact<std::string>()) {
    try {
      std::size_t used = 0;
      auto v = std::stoull(*s, &used, 0);
      if (used == s->size()) return v;
    } catch (const std::exception&) {
    }
    throw ConfigError("config key " + where(section, key) + " is not an unsigned integer");
  }
  auto v = need<std::int64_t>(node, section, key);
  if (v < 0) throw ConfigError("config key " + where(section, key) + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

std::vector<std::string> need_strings(const toml::node& node, std::string_view section, std::string_view key) {
  std::vector<std::string> out;
  if (auto s = node.value_exact<std::string>()) {
    // "a,b" is accepted so that command-line overrides can carry lists.
    std::stringstream ss(*s);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto first = item.find_first_not_of(' ');
      if (first == std::string::npos) continue;
      out.push_back(item.substr(first, item.find_last_not_of(' ') - first + 1));
    }
    return out;
  }
  const auto* arr = node.as_array();
  if (!arr) throw ConfigError("config key " + where(section, key) + " must be a list of strings");
  for (const auto& el : *arr) {
    auto s = el.value_exact<std::string>();
    if (!s) throw ConfigError("config key " + where(section, key) + " must be a list of strings");
    out.push_back(*s);
  }
  return out;
}

void apply_entry(RunConfig& cfg, std::string_view section, std::string_view key, const toml::node& v) {
  auto unknown = [&] { throw ConfigError("unknown config key " + where(section, key)); };
  if (section == "world") {
    if (key == "n") cfg.world.n = need_int(v, section, key);
    else if (key == "m") cfg.world.m = need_int(v, section, key);
    else if (key == "e") cfg.world.e = need<double>(v, section, key);
    else if (key == "num_ops") cfg.world.num_ops = need_int(v, section, key);
    else if (key == "nouns") cfg.nouns = need<std::string>(v, section, key);
    else if (key == "put_max") cfg.world.arity.put_max = need_int(v, section, key);
    else if (key == "move_max") cfg.world.arity.move_max = need_int(v, section, key);
    else if (key == "remove_max") cfg.world.arity.remove_max = need_int(v, section, key);
    else unknown();
  } else if (section == "generate") {
    if (key == "count") cfg.count = need_int(v, section, key);
    else if (key == "seed") cfg.seed = need_seed(v, section, key);
    else unknown();
  } else if (section == "split") {
    if (key == "kind") cfg.split_kind = need<std::string>(v, section, key);
    else if (key == "train") cfg.ratios.train = need_int(v, section, key);
    else if (key == "dev") cfg.ratios.dev = need_int(v, section, key);
    else if (key == "test") cfg.ratios.test = need_int(v, section, key);
    else if (key == "seed") cfg.split_seed = need_seed(v, section, key);
    else if (key == "subsample_per_stratum") cfg.subsample_per_stratum = need_int(v, section, key);
    else unknown();
  } else if (section == "prompt") {
    if (key == "mode") cfg.prompt = PromptSpec::parse(need<std::string>(v, section, key), to_string(cfg.prompt.demos));
    else if (key == "demos") cfg.prompt = PromptSpec::parse(to_string(cfg.prompt.mode), need<std::string>(v, section, key));
    else unknown();
  } else if (section == "run") {
    if (key == "endpoint") cfg.endpoint = need<std::string>(v, section, key);
    else if (key == "model") cfg.decode.model = need<std::string>(v, section, key);
    else if (key == "temperature") cfg.decode.temperature = need<double>(v, section, key);
    else if (key == "max_tokens") cfg.decode.max_tokens = need_int(v, section, key);
    else if (key == "stop") cfg.decode.stop = need_strings(v, section, key);
    else if (key == "parallel") cfg.parallel = need_int(v, section, key);
    else if (key == "max_attempts") cfg.max_attempts = need_int(v, section, key);
    else if (key == "cache") cfg.cache_dir = need<std::string>(v, section, key);
    else unknown();
  } else if (section == "baseline") {
    if (key == "kinds") cfg.baselines = need_strings(v, section, key);
    else if (key == "seed") cfg.baseline_seed = need_seed(v, section, key);
    else unknown();
  } else if (section == "output") {
    if (key == "dir") cfg.out_dir = need<std::string>(v, section, key);
    else unknown();
  } else {
    throw ConfigError("unknown config section [" + std::string(section) + "]");
  }
}

void check_config(RunConfig& cfg) {
  cfg.world.objects = load_nouns(cfg.nouns);
  cfg.world.validate();
  if (cfg.count < 1) throw ConfigError("generate.count must be at least 1");
  if (cfg.split_kind != "demo") {
    split_kind_from_string(cfg.split_kind);
    if (cfg.ratios.train < 0 || cfg.ratios.dev < 0 || cfg.ratios.test < 0) {
      throw ConfigError("split sizes must be non-negative");
    }
  }
  if (cfg.subsample_per_stratum < 0) throw ConfigError("split.subsample_per_stratum must be non-negative");
  if (cfg.parallel < 1) throw ConfigError("run.parallel must be at least 1");
  if (cfg.max_attempts < 1) throw ConfigError("run.max_attempts must be at least 1");
  if (cfg.decode.max_tokens < 1) throw ConfigError("run.max_tokens must be at least 1");
  for (const auto& b : cfg.baselines) baseline_kind_from_string(b);
  cfg.prompt.layout();
}

std::vector<std::string> split_override(const std::string& text, std::string& value) {
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + text + "' is not of the form section.key=value");
  const std::string path = text.substr(0, eq);
  value = text.substr(eq + 1);
  const auto dot = path.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == path.size()) {
    throw ConfigError("override '" + text + "' must name section.key");
  }
  return {path.substr(0, dot), path.substr(dot + 1)};
}

std::string file_hash(const fs::path& p) { return sha256_hex(read_text_file(p)); }

}  // namespace

std::uint64_t RunConfig::effective_split_seed() const { return split_seed.value_or(derive_seed(seed, kSplitStream)); }

std::uint64_t RunConfig::effective_subsample_seed() const { return derive_seed(seed, kSubsampleStream); }

std::uint64_t RunConfig::effective_baseline_seed() const {
  return baseline_seed.value_or(derive_seed(seed, kBaselineStream));
}

json RunConfig::to_json() const {
  json j;
  j["world"] = world_config_to_json(world);
  j["world"]["nouns"] = nouns;
  j["generate"] = {{"count", count}, {"seed", seed}};
  j["split"] = {{"kind", split_kind},
                {"train", ratios.train},
                {"dev", ratios.dev},
                {"test", ratios.test},
                {"seed", effective_split_seed()},
                {"subsample_per_stratum", subsample_per_stratum},
                {"subsample_seed", effective_subsample_seed()}};
  j["prompt"] = {{"mode", to_string(prompt.mode)}, {"demos", to_string(prompt.demos)}};
  j["run"] = {{"endpoint", endpoint},
              {"decode", decode.to_json()},
              {"parallel", parallel},
              {"max_attempts", max_attempts},
              {"cache", cache_dir}};
  j["baseline"] = {{"kinds", baselines}, {"seed", effective_baseline_seed()}};
  j["output"] = {{"dir", out_dir.generic_string()}};
  return j;
}

RunConfig parse_run_config(const std::string& toml_text, const std::vector<std::string>& overrides) {
  toml::table tbl;
  try {
    tbl = toml::parse(toml_text);
  } catch (const toml::parse_error& err) {
    std::ostringstream msg;
    msg << "config parse error at line " << err.source().begin.line << ": " << err.description();
    throw ConfigError(msg.str());
  }
  RunConfig cfg;
  for (auto&& [section, node] : tbl) {
    const auto* inner = node.as_table();
    if (!inner) throw ConfigError("top-level config key '" + std::string(section.str()) + "' must be a section");
    static const std::set<std::string_view> kSections{"world", "generate", "split", "prompt",
                                                      "run",   "baseline", "output"};
    if (!kSections.contains(section.str())) {
      throw ConfigError("unknown config section [" + std::string(section.str()) + "]");
    }
    for (auto&& [key, value] : *inner) apply_entry(cfg, section.str(), key.str(), value);
  }
  for (const auto& o : overrides) {
    std::string value;
    const auto parts = split_override(o, value);
    toml::table parsed;
    try {
      parsed = toml::parse("v = " + value);
    } catch (const toml::parse_error&) {
      parsed.insert_or_assign("v", value);  // bare word
    }
    apply_entry(cfg, parts[0], parts[1], *parsed.get("v"));
  }
  check_config(cfg);
  return cfg;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::string text;
  try {
    text = read_text_file(path);
  } catch (const IoError& err) {
    throw ConfigError(err.what());
  }
  return parse_run_config(text, overrides);
}

std::vector<std::string> load_nouns(const std::string& spec) {
  if (spec == "bnc" || spec == "base") return bnc_nouns();
  if (spec == "rare") return rare_nouns();
  std::ifstream in(spec);
  if (!in) throw ConfigError("noun list '" + spec + "' is neither bnc, rare nor a readable file");
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    line.erase(0, line.find_first_not_of(" \t\r"));
    line.erase(line.find_last_not_of(" \t\r") + 1);
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

void CheckResult::fail(std::string message) {
  ok = false;
  ++failure_count;
  if (failures.size() < kMaxListedFailures) failures.push_back(std::move(message));
}

bool AuditReport::ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.ok; });
}

json AuditReport::to_json() const {
  json j;
  j["ok"] = ok();
  j["checks"] = json::array();
  for (const auto& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"ok", c.ok},
                           {"checked", c.checked},
                           {"failure_count", c.failure_count},
                           {"failures", c.failures}});
  }
  return j;
}

std::string AuditReport::to_text() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.ok ? "ok    " : "FAIL  ") << c.name << " (" << c.checked << " checked";
    if (!c.ok) out << ", " << c.failure_count << " failed";
    out << ")\n";
    for (const auto& f : c.failures) out << "      " << f << "\n";
    if (c.failure_count > c.failures.size()) out << "      ... " << c.failure_count - c.failures.size() << " more\n";
  }
  out << (ok() ? "all checks passed\n" : "validation failed\n");
  return out.str();
}

namespace {

struct SplitOnDisk {
  fs::path dir;
  json manifest;
};

// Capacity and uniqueness of one state; `label` names the scenario and step.
void audit_state(const std::vector<BoxContents>& boxes, const WorldConfig& cfg, const std::string& label,
                 CheckResult& capacity, CheckResult& uniqueness) {
  ++capacity.checked;
  ++uniqueness.checked;
  if (static_cast<int>(boxes.size()) != cfg.n) {
    capacity.fail(label + " has " + std::to_string(boxes.size()) + " boxes, expected " + std::to_string(cfg.n));
  }
  std::unordered_set<std::string> seen;
  for (std::size_t b = 0; b < boxes.size(); ++b) {
    if (static_cast<int>(boxes[b].size()) > cfg.m) {
      capacity.fail(label + " box " + std::to_string(b) + " holds " + std::to_string(boxes[b].size()) +
                    " objects, capacity is " + std::to_string(cfg.m));
    }
    for (const auto& o : boxes[b]) {
      if (!seen.insert(o).second) uniqueness.fail(label + " holds '" + o + "' more than once");
    }
  }
}

std::map<std::string, std::vector<std::string>> ids_by_side(const json& manifest) {
  std::map<std::string, std::vector<std::string>> out;
  if (!manifest.contains("scenario_ids")) return out;
  for (auto& [side, ids] : manifest["scenario_ids"].items()) out[side] = ids.get<std::vector<std::string>>();
  return out;
}

}  // namespace

AuditReport validate_dataset(const fs::path& scenarios_file, const std::vector<fs::path>& split_dirs,
                             const WorldConfig& cfg) {
  CheckResult capacity("capacity"), uniqueness("uniqueness"), replay_check("replay");
  CheckResult disjoint("signature_disjoint"), lexical("lexical_overlap"), counts("example_counts");
  CheckResult gold("gold_consistency");

  std::map<std::string, Scenario> scenarios;
  std::map<std::string, std::string> signatures;  // from the initial state as serialized
  for_each_jsonl(scenarios_file, [&](const json& j, std::size_t line) {
    const std::string id =
        j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "line " + std::to_string(line);
    const std::string label = "scenario " + id;
    if (signatures.contains(id)) uniqueness.fail(label + " appears more than once");
    std::vector<BoxContents> initial;
    try {
      initial = j.at("initial").get<std::vector<BoxContents>>();
    } catch (const json::exception&) {
      replay_check.fail(label + ": missing or malformed initial state");
      ++replay_check.checked;
      return;
    }
    audit_state(initial, cfg, label + " initial state", capacity, uniqueness);
    std::string sig;
    for (const auto& b : initial) sig += std::to_string(b.size());
    signatures[id] = sig;

    ++replay_check.checked;
    try {
      Scenario sc = scenario_from_json(j, cfg);
      for (std::size_t t = 1; t < sc.states.size(); ++t) {
        audit_state(sc.states[t].boxes(), cfg, label + " after step " + std::to_string(t), capacity, uniqueness);
      }
      scenarios.emplace(id, std::move(sc));
    } catch (const PreconditionViolation& err) {
      replay_check.fail(label + ": step " + std::to_string(err.step()) + ": " + err.what());
    } catch (const Error& err) {
      replay_check.fail(label + ": " + err.what());
    }
  });

  std::vector<SplitOnDisk> splits;
  for (const auto& dir : split_dirs) {
    const auto text = read_text_file(dir / "manifest.json");
    try {
      splits.push_back({dir, json::parse(text)});
    } catch (const json::exception& err) {
      throw IoError((dir / "manifest.json").string() + ": " + err.what());
    }
  }

  for (const auto& split : splits) {
    const std::string name = split.dir.filename().string();
    const auto sides = ids_by_side(split.manifest);

    // Signature disjointness across every pair of sides.
    std::map<std::string, std::string> owner;  // signature -> side
    for (const auto& [side, ids] : sides) {
      for (const auto& id : ids) {
        ++disjoint.checked;
        auto it = signatures.find(id);
        if (it == signatures.end()) {
          disjoint.fail(name + "/" + side + ": scenario " + id + " is not in the scenario file");
          continue;
        }
        auto [o, fresh] = owner.emplace(it->second, side);
        if (!fresh && o->second != side) {
          disjoint.fail(name + ": signature " + it->second + " of scenario " + id + " (" + side +
                        ") also occurs in " + o->second);
        }
      }
    }

    // Example counts and gold consistency.
    const std::string kind = split.manifest.value("kind", "");
    std::map<std::string, std::vector<ClozeExample>> examples;
    for (const auto& [side, ids] : sides) {
      const fs::path file = split.dir / (side + ".jsonl");
      examples[side] = read_examples(file);
      std::size_t expected = 0;
      for (const auto& id : ids) {
        auto sc = scenarios.find(id);
        const int ops = sc == scenarios.end() ? cfg.num_ops : sc->second.num_ops();
        int prefixes = ops + 1;
        if (kind == "demo") {
          prefixes = ops >= 1 ? 2 : 1;
        } else if (side == "train" && split.manifest.contains("max_train_t") &&
                   !split.manifest["max_train_t"].is_null()) {
          prefixes = std::min(split.manifest["max_train_t"].get<int>(), ops) + 1;
        }
        expected += static_cast<std::size_t>(prefixes * cfg.n);
      }
      ++counts.checked;
      if (examples[side].size() != expected) {
        counts.fail(name + "/" + side + ": " + std::to_string(examples[side].size()) + " examples, expected " +
                    std::to_string(expected));
      }
      if (split.manifest.contains("counts") && split.manifest["counts"].contains("examples")) {
        const auto recorded = split.manifest["counts"]["examples"].value(side, std::size_t{0});
        ++counts.checked;
        if (recorded != examples[side].size()) {
          counts.fail(name + "/" + side + ": manifest records " + std::to_string(recorded) + " examples, file has " +
                      std::to_string(examples[side].size()));
        }
      }

      std::map<std::string, std::map<std::string, std::string>> back;  // lexicon -> noun -> corpus object
      const std::unordered_set<std::string> members(ids.begin(), ids.end());
      for (const auto& ex : examples[side]) {
        ++gold.checked;
        const std::string label = name + "/" + side + " " + ex.key();
        if (!members.contains(ex.scenario_id)) {
          gold.fail(label + ": scenario is not listed in the manifest");
          continue;
        }
        auto sc = scenarios.find(ex.scenario_id);
        if (sc == scenarios.end()) continue;  // reported by replay
        if (ex.t < 0 || ex.t > sc->second.num_ops() || ex.box < 0 || ex.box >= sc->second.num_boxes()) {
          gold.fail(label + ": prefix or box out of range");
          continue;
        }
        auto& map = back[ex.meta.lexicon];
        if (map.empty()) {
          std::vector<std::string> nouns;
          try {
            nouns = Lexicon::by_name(ex.meta.lexicon).nouns();
          } catch (const ConfigError&) {
            nouns = cfg.objects;
          }
          for (std::size_t i = 0; i < nouns.size() && i < cfg.objects.size(); ++i) map[nouns[i]] = cfg.objects[i];
        }
        BoxContents mapped;
        bool unknown = false;
        for (const auto& o : ex.gold) {
          auto it = map.find(o);
          if (it == map.end()) {
            unknown = true;
            break;
          }
          mapped.push_back(it->second);
        }
        const auto& truth = sc->second.states[static_cast<std::size_t>(ex.t)].box(ex.box);
        if (unknown || !same_contents(mapped, truth)) {
          gold.fail(label + ": gold does not match the replayed state");
        } else if (ex.meta.ops_affecting != ops_affecting_box(sc->second, ex.t, ex.box) ||
                   ex.meta.changed != changed_from_initial(sc->second, ex.t, ex.box)) {
          gold.fail(label + ": metadata does not match the replayed scenario");
        }
      }
    }

    // Lexical overlap between train and test renderings.
    const std::string train_lex = split.manifest.value("train_lexicon", "");
    const std::string test_lex = split.manifest.value("test_lexicon", "");
    if (!train_lex.empty() && train_lex != test_lex && examples.contains("train") && examples.contains("test")) {
      const Lexicon a = Lexicon::by_name(train_lex);
      const Lexicon b = Lexicon::by_name(test_lex);
      std::set<std::string> nouns(a.nouns().begin(), a.nouns().end());
      nouns.insert(b.nouns().begin(), b.nouns().end());
      auto texts = [](const std::vector<ClozeExample>& exs) {
        std::vector<std::string> out;
        std::unordered_set<std::string> seen;
        for (const auto& ex : exs) {
          if (seen.insert(ex.state_key()).second) out.push_back(ex.description);
        }
        return out;
      };
      ++lexical.checked;
      const auto audit =
          lexical_overlap(texts(examples["train"]), texts(examples["test"]), a.form() == b.form() ? &nouns : nullptr);
      if (!audit.ok()) {
        std::string words;
        for (const auto& w : audit.disallowed) words += (words.empty() ? "" : ", ") + w;
        lexical.fail(name + ": train and test share " + words);
      }
    }
  }

  AuditReport report;
  report.checks = {capacity, uniqueness, replay_check, disjoint, lexical, counts, gold};
  return report;
}

AuditReport validate_artifact_dir(const fs::path& dir, const WorldConfig& cfg) {
  const fs::path scenarios = dir / "scenarios.jsonl";
  if (!fs::exists(scenarios)) throw IoError(scenarios.string() + ": no such file");
  std::vector<fs::path> split_dirs;
  if (fs::is_directory(dir / "split")) {
    for (const auto& entry : fs::directory_iterator(dir / "split")) {
      if (entry.is_directory() && fs::exists(entry.path() / "manifest.json")) split_dirs.push_back(entry.path());
    }
  }
  std::sort(split_dirs.begin(), split_dirs.end());
  return validate_dataset(scenarios, split_dirs, cfg);
}

std::unordered_map<std::string, std::string> scripted_completions(const std::vector<PromptRecord>& prompts,
                                                                  const std::vector<ClozeExample>& examples,
                                                                  const Lexicon& lex, std::string_view behaviour) {
  const bool initial = behaviour == "repeat-initial";
  if (!initial && behaviour != "gold") {
    throw ConfigError("unknown mock behaviour '" + std::string(behaviour) + "' (expected gold or repeat-initial)");
  }
  auto contents = [&](const ClozeExample& ex) { return initial ? baseline_repeat_initial(ex, lex) : ex.gold; };

  std::unordered_map<std::string, std::string> by_key;
  std::map<std::string, std::vector<BoxContents>> states;
  for (const auto& ex : examples) {
    by_key[ex.key()] = completion_for(contents(ex), lex);
    auto& boxes = states[ex.state_key()];
    if (static_cast<int>(boxes.size()) <= ex.box) boxes.resize(static_cast<std::size_t>(ex.box) + 1);
    boxes[static_cast<std::size_t>(ex.box)] = contents(ex);
  }
  const std::string head = lex.box_label(0) + " contains";
  std::unordered_map<std::string, std::string> script;
  for (const auto& p : prompts) {
    if (p.mode == "per-box") {
      if (auto it = by_key.find(p.key); it != by_key.end()) script[p.prompt] = it->second;
      continue;
    }
    auto it = states.find(p.key);
    if (it == states.end()) continue;
    const std::string statement = render_statement(WorldState(it->second), lex);
    script[p.prompt] = statement.substr(head.size());
  }
  return script;
}

namespace {

std::vector<ClozeExample> demo_examples(const std::vector<Scenario>& corpus, const Lexicon& lex) {
  std::vector<ClozeExample> out;
  for (const auto& sc : corpus) {
    auto demo = build_demo(sc, lex);
    out.insert(out.end(), demo.examples.begin(), demo.examples.end());
  }
  return out;
}

json evaluate(const std::vector<ClozeExample>& examples, const std::vector<Prediction>& preds, const Lexicon& lex,
              const fs::path& report_dir) {
  const auto scoring = score_predictions(examples, preds, lex);
  const auto report = stratify_and_report(scoring.scored);
  write_report(report, report_dir);
  json omitted = json::array();
  for (const auto& [ops, changed] : report.omitted) omitted.push_back({{"ops_affecting", ops}, {"changed", changed}});
  return {{"scored", scoring.scored.size()},
          {"missing", scoring.missing},
          {"errored", scoring.errored},
          {"residual", scoring.residual},
          {"correct", report.overall.correct},
          {"accuracy", report.overall.accuracy},
          {"ci_low", report.overall.ci_low},
          {"ci_high", report.overall.ci_high},
          {"omitted_strata", omitted}};
}

}  // namespace

json run_pipeline(const RunConfig& cfg) {
  if (cfg.split_kind != "demo" && cfg.ratios.total() != cfg.count) {
    throw ConfigError("split sizes " + std::to_string(cfg.ratios.train) + "/" + std::to_string(cfg.ratios.dev) + "/" +
                      std::to_string(cfg.ratios.test) + " do not add up to generate.count " +
                      std::to_string(cfg.count));
  }
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);

  json manifest;
  manifest["tool"] = {{"name", "boxtrack"}, {"version", kVersion}};
  manifest["config"] = cfg.to_json();
  manifest["seeds"] = {{"master", cfg.seed},
                       {"split", cfg.effective_split_seed()},
                       {"subsample", cfg.effective_subsample_seed()},
                       {"baseline", cfg.effective_baseline_seed()}};
  manifest["cleanup_policy"] =
      "artifacts written before a failing stage are kept in place and listed under files; a rerun overwrites them";
  manifest["stages"] = json::array();
  json files = json::object();
  std::string stage;

  auto record = [&](const fs::path& p) { files[fs::relative(p, out).generic_string()] = file_hash(p); };
  auto finish = [&](const std::string& status) {
    manifest["status"] = status;
    manifest["files"] = files;
    json body = manifest;
    body.erase("content_hash");
    manifest["content_hash"] = sha256_hex(body.dump());
    write_text_file(out / "manifest.json", manifest.dump(2) + "\n");
  };

  try {
    stage = "generate";
    const auto corpus = generate_corpus(cfg.world, cfg.count, cfg.seed);
    write_scenarios(out / "scenarios.jsonl", corpus);
    record(out / "scenarios.jsonl");
    manifest["counts"]["scenarios"] = corpus.size();
    manifest["counts"]["questions_per_scenario"] = cfg.world.n * (cfg.world.num_ops + 1);
    manifest["stages"].push_back(stage);

    stage = "split";
    Lexicon test_lex = Lexicon::base();
    std::vector<ClozeExample> test_examples;
    fs::path split_dir;
    if (cfg.split_kind == "demo") {
      split_dir = out / "split" / "demo";
      fs::create_directories(split_dir);
      test_examples = demo_examples(corpus, test_lex);
      write_examples(split_dir / "test.jsonl", test_examples);
      json ids = json::array();
      for (const auto& sc : corpus) ids.push_back(sc.id);
      json sm{{"kind", "demo"},
              {"train_lexicon", "base"},
              {"test_lexicon", "base"},
              {"counts", {{"scenarios", {{"test", corpus.size()}}}, {"examples", {{"test", test_examples.size()}}}}},
              {"scenario_ids", {{"test", ids}}}};
      write_text_file(split_dir / "manifest.json", sm.dump(2) + "\n");
      manifest["split"] = {{"kind", "demo"}, {"counts", sm["counts"]}};
    } else {
      const SplitSpec spec = SplitSpec::for_kind(split_kind_from_string(cfg.split_kind), cfg.ratios);
      split_dir = out / "split" / std::string(to_string(spec.kind));
      fs::create_directories(split_dir);
      const auto partition = partition_by_signature(corpus, cfg.ratios, cfg.effective_split_seed());
      auto examples = build_split(spec, corpus, partition, cfg.world);
      json sm = write_split(split_dir, spec, corpus, partition, examples);
      sm.erase("scenario_ids");
      manifest["split"] = sm;
      test_lex = Lexicon::by_name(spec.test_lexicon);
      test_examples = std::move(examples.test);
      for (const char* side : {"train.jsonl", "dev.jsonl"}) record(split_dir / side);
    }
    record(split_dir / "test.jsonl");
    record(split_dir / "manifest.json");
    manifest["stages"].push_back(stage);

    stage = "validate";
    const auto audit = validate_artifact_dir(out, cfg.world);
    manifest["audit"] = audit.to_json();
    if (!audit.ok()) throw Error("dataset validation failed:\n" + audit.to_text());
    manifest["stages"].push_back(stage);

    stage = "render";
    std::vector<ClozeExample> eval = test_examples;
    if (cfg.subsample_per_stratum > 0) {
      auto sub = build_subsample(test_examples, cfg.subsample_per_stratum, cfg.effective_subsample_seed());
      eval = std::move(sub.examples);
      manifest["counts"]["subsample"] = {
          {"states", sub.state_keys.size()}, {"scenarios", sub.scenarios}, {"examples", eval.size()}};
    }
    fs::create_directories(out / "eval");
    write_examples(out / "eval" / "examples.jsonl", eval);
    record(out / "eval" / "examples.jsonl");
    manifest["counts"]["evaluation_examples"] = eval.size();
    manifest["stages"].push_back(stage);

    json evaluation = json::object();
    if (!cfg.endpoint.empty()) {
      stage = "prompt";
      const auto prompts = build_prompts(cfg.prompt, eval);
      write_prompts(out / "eval" / "prompts.jsonl", prompts);
      record(out / "eval" / "prompts.jsonl");
      manifest["counts"]["prompts"] = prompts.size();
      manifest["stages"].push_back(stage);

      stage = "run";
      DecodeParams params = cfg.decode;
      std::unique_ptr<MockCompletionServer> mock;
      Endpoint endpoint;
      if (cfg.endpoint.starts_with("mock:")) {
        const auto behaviour = cfg.endpoint.substr(5);
        mock = std::make_unique<MockCompletionServer>(
            scripted_responder(scripted_completions(prompts, eval, test_lex, behaviour)));
        endpoint.base_url = mock->base_url();
        if (params.model.empty()) params.model = cfg.endpoint;
      } else {
        endpoint = Endpoint::from_url(cfg.endpoint);
      }
      endpoint.max_attempts = cfg.max_attempts;
      std::unique_ptr<CompletionCache> cache;
      if (!cfg.cache_dir.empty()) cache = std::make_unique<CompletionCache>(cfg.cache_dir);
      BatchSummary summary;
      const auto records = run_batch(prompts, params, endpoint, cfg.parallel, cache.get(), &summary);
      write_completion_records(out / "eval" / "predictions.jsonl", records);
      manifest["counts"]["completions"] = {{"total", summary.total}, {"ok", summary.ok}, {"failed", summary.failed}};
      if (summary.failed > 0) {
        throw TransportError(std::to_string(summary.failed) + " of " + std::to_string(summary.total) +
                             " completions failed; see eval/predictions.jsonl");
      }
      manifest["stages"].push_back(stage);

      stage = "score";
      std::vector<Prediction> preds;
      preds.reserve(records.size());
      for (const auto& r : records) preds.push_back({r.key, r.mode, r.completion, r.status, r.error});
      evaluation["model"] = evaluate(eval, preds, test_lex, out / "eval" / "model");
      for (const char* f : {"report.csv", "report.json", "panel_changed.csv", "panel_unchanged.csv"}) {
        record(out / "eval" / "model" / f);
      }
      manifest["stages"].push_back(stage);
    }

    if (!cfg.baselines.empty()) {
      stage = "baseline";
      for (const auto& name : cfg.baselines) {
        const auto preds = run_baseline(eval, baseline_kind_from_string(name), test_lex, cfg.effective_baseline_seed());
        const fs::path dir = out / "eval" / ("baseline-" + name);
        fs::create_directories(dir);
        {
          JsonlWriter w(dir / "predictions.jsonl");
          for (const auto& p : preds) w.write(prediction_to_json(p));
          w.flush();
        }
        record(dir / "predictions.jsonl");
        evaluation["baseline-" + name] = evaluate(eval, preds, test_lex, dir);
        for (const char* f : {"report.csv", "report.json", "panel_changed.csv", "panel_unchanged.csv"}) {
          record(dir / f);
        }
      }
      manifest["stages"].push_back(stage);
    }
    manifest["evaluation"] = evaluation;
  } catch (const Error& err) {
    manifest["failed_stage"] = stage;
    manifest["error"] = err.what();
    finish("failed");
    throw;
  } catch (const std::exception& err) {
    manifest["failed_stage"] = stage;
    manifest["error"] = err.what();
    finish("failed");
    throw Error("stage " + stage + " failed: " + err.what());
  }
  finish("ok");
  return manifest;
}

}  // namespace boxtrack
