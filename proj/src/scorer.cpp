#include "boxtrack/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "boxtrack/errors.hpp"

namespace boxtrack {

namespace {

bool is_number(const std::string& tok) {
  return !tok.empty() && std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; });
}

bool has_alpha(const std::string& tok) {
  return std::any_of(tok.begin(), tok.end(), [](char c) { return c >= 'a' && c <= 'z'; });
}

// If tokens[i] starts a box label, returns the box index; the label spans two tokens.
std::optional<int> label_at(const std::vector<std::string>& tokens, std::size_t i) {
  if (i + 1 >= tokens.size()) return std::nullopt;
  const auto& head = tokens[i];
  const auto& tail = tokens[i + 1];
  if (head == "box" && is_number(tail) && tail.size() <= 3) return std::stoi(tail);
  if (head == "container" && tail.size() == 1 && tail[0] >= 'a' && tail[0] <= 'z') return tail[0] - 'a';
  return std::nullopt;
}

void push_unique(BoxContents& objs, const std::string& o) {
  if (std::find(objs.begin(), objs.end(), o) == objs.end()) objs.push_back(o);
}

struct Clause {
  std::vector<int> boxes;
  BoxContents objects;
  bool initial = false;
};

std::vector<Clause> scan_clauses(const std::string& description, const Lexicon& lex) {
  std::vector<Clause> out;
  auto scan = [&](std::string_view text, bool initial) {
    Clause c;
    c.initial = initial;
    auto tokens = tokenize(text);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (auto b = label_at(tokens, i)) {
        c.boxes.push_back(*b);
        ++i;
      } else if (lex.has_noun(tokens[i])) {
        push_unique(c.objects, tokens[i]);
      }
    }
    out.push_back(std::move(c));
  };
  std::size_t start = 0;
  bool first = true;
  while (start < description.size()) {
    std::size_t end = description.find('.', start);
    if (end == std::string::npos) end = description.size();
    std::string_view sentence(description.data() + start, end - start);
    if (first) {
      std::size_t cs = 0;
      while (cs <= sentence.size()) {
        std::size_t ce = sentence.find(',', cs);
        if (ce == std::string_view::npos) ce = sentence.size();
        scan(sentence.substr(cs, ce - cs), true);
        cs = ce + 1;
      }
      first = false;
    } else if (sentence.find_first_not_of(' ') != std::string_view::npos) {
      scan(sentence, false);
    }
    start = end + 1;
  }
  return out;
}

BoxContents draw_zero_to_three(const BoxContents& pool, Rng& rng) {
  std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(rng.uniform_index(4)), pool.size());
  BoxContents out;
  for (auto i : rng.choose(pool.size(), k)) out.push_back(pool[i]);
  return out;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

StratumRow make_row(int ops, bool changed, std::size_t count, std::size_t correct) {
  StratumRow r{ops, changed, count, correct};
  r.accuracy = count ? static_cast<double>(correct) / static_cast<double>(count) : 0.0;
  auto ci = wilson_interval(correct, count);
  r.ci_low = ci.low;
  r.ci_high = ci.high;
  return r;
}

std::string csv_row(const std::string& ops, const std::string& changed, const StratumRow& r) {
  return ops + "," + changed + "," + std::to_string(r.count) + "," + std::to_string(r.correct) + "," +
         fmt_double(r.accuracy) + "," + fmt_double(r.ci_low) + "," + fmt_double(r.ci_high) + "\n";
}

json row_json(const StratumRow& r) {
  return json{{"ops_affecting", r.ops_affecting}, {"changed", r.changed}, {"count", r.count},
              {"correct", r.correct},             {"accuracy", r.accuracy}, {"ci_low", r.ci_low},
              {"ci_high", r.ci_high}};
}

}  // namespace

ParsedBoxes parse_all_boxes(std::string_view completion, const Lexicon& lex, const std::vector<std::string>& vocab,
                            int first_box) {
  static const std::unordered_set<std::string> kScaffold{"the", "a", "an", "and", "contains", "nothing"};
  std::unordered_set<std::string> nouns;
  for (const auto& v : vocab) {
    std::string lower = v;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    nouns.insert(lower);
  }

  const std::string text = lex.box_label(first_box) + " contains " + std::string(completion);
  const auto tokens = tokenize(text);

  ParsedBoxes parsed;
  std::optional<int> current;
  std::unordered_map<int, bool> said_nothing;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (auto b = label_at(tokens, i)) {
      current = *b;
      if (parsed.has(*b)) {
        parsed.residual[*b] = true;
      } else {
        parsed.boxes[*b];
        parsed.residual[*b] = false;
      }
      ++i;
      continue;
    }
    if (!current) continue;
    const auto& tok = tokens[i];
    if (nouns.contains(tok)) {
      push_unique(parsed.boxes[*current], tok);
    } else if (tok == "nothing") {
      said_nothing[*current] = true;
    } else if (has_alpha(tok) && !kScaffold.contains(tok)) {
      parsed.residual[*current] = true;
    }
  }
  for (const auto& [box, nothing] : said_nothing) {
    if (nothing && !parsed.boxes[box].empty()) parsed.residual[box] = true;
  }
  return parsed;
}

bool score_example(const BoxContents& pred, bool residual, const BoxContents& gold) {
  return !residual && same_contents(pred, gold);
}

BoxContents box_mention_pool(const ClozeExample& ex, const Lexicon& lex) {
  BoxContents pool;
  for (const auto& c : scan_clauses(ex.description, lex)) {
    if (std::find(c.boxes.begin(), c.boxes.end(), ex.box) == c.boxes.end()) continue;
    for (const auto& o : c.objects) push_unique(pool, o);
  }
  return pool;
}

BoxContents description_object_pool(const ClozeExample& ex, const Lexicon& lex) {
  BoxContents pool;
  for (const auto& c : scan_clauses(ex.description, lex)) {
    for (const auto& o : c.objects) push_unique(pool, o);
  }
  return pool;
}

BoxContents baseline_random(const ClozeExample& ex, const Lexicon& lex, Rng& rng) {
  return draw_zero_to_three(box_mention_pool(ex, lex), rng);
}

BoxContents baseline_full_random(const ClozeExample& ex, const Lexicon& lex, Rng& rng) {
  return draw_zero_to_three(description_object_pool(ex, lex), rng);
}

BoxContents baseline_repeat_initial(const ClozeExample& ex, const Lexicon& lex) {
  for (const auto& c : scan_clauses(ex.description, lex)) {
    if (c.initial && std::find(c.boxes.begin(), c.boxes.end(), ex.box) != c.boxes.end()) return c.objects;
  }
  return {};
}

std::string completion_for(const BoxContents& objs, const Lexicon& lex) {
  if (objs.empty()) return " " + lex.templates().empty_phrase;
  return " " + render_objects(objs, lex);
}

Interval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  // Clamp so the interval always brackets p despite rounding at p = 0 or 1.
  return {std::clamp(std::min(center - half, p), 0.0, 1.0), std::clamp(std::max(center + half, p), 0.0, 1.0)};
}

const StratumRow* StratifiedReport::find(int ops_affecting, bool changed) const {
  for (const auto& r : rows) {
    if (r.ops_affecting == ops_affecting && r.changed == changed) return &r;
  }
  return nullptr;
}

json StratifiedReport::to_json() const {
  json j;
  j["rows"] = json::array();
  for (const auto& r : rows) j["rows"].push_back(row_json(r));
  json all = row_json(overall);
  all.erase("ops_affecting");
  all.erase("changed");
  j["overall"] = all;
  j["omitted_strata"] = json::array();
  for (const auto& [ops, changed] : omitted) j["omitted_strata"].push_back({{"ops_affecting", ops}, {"changed", changed}});
  j["ci_method"] = "wilson";
  j["z"] = kZ95;
  return j;
}

std::string StratifiedReport::to_csv() const {
  std::string out = "ops_affecting,changed,count,correct,accuracy,ci_low,ci_high\n";
  for (const auto& r : rows) out += csv_row(std::to_string(r.ops_affecting), r.changed ? "true" : "false", r);
  out += csv_row("all", "all", overall);
  return out;
}

std::string StratifiedReport::panel_csv(bool changed) const {
  std::string out = "ops_affecting,changed,count,correct,accuracy,ci_low,ci_high\n";
  for (const auto& r : rows) {
    if (r.changed == changed) out += csv_row(std::to_string(r.ops_affecting), changed ? "true" : "false", r);
  }
  return out;
}

StratifiedReport stratify_and_report(const std::vector<ScoredExample>& scores, int max_ops) {
  std::map<std::pair<bool, int>, std::pair<std::size_t, std::size_t>> cells;
  std::size_t total = 0, correct = 0;
  for (const auto& s : scores) {
    auto& cell = cells[{s.meta.changed, s.meta.ops_affecting}];
    ++cell.first;
    cell.second += s.correct ? 1 : 0;
    ++total;
    correct += s.correct ? 1 : 0;
  }
  StratifiedReport report;
  for (const auto& [k, v] : cells) report.rows.push_back(make_row(k.second, k.first, v.first, v.second));
  report.overall = make_row(-1, false, total, correct);
  for (bool changed : {false, true}) {
    for (int ops = 0; ops <= max_ops; ++ops) {
      if (!cells.contains({changed, ops})) report.omitted.emplace_back(ops, changed);
    }
  }
  return report;
}

void write_report(const StratifiedReport& report, const std::filesystem::path& dir) {
  write_text_file(dir / "report.csv", report.to_csv());
  write_text_file(dir / "report.json", report.to_json().dump(2) + "\n");
  write_text_file(dir / "panel_changed.csv", report.panel_csv(true));
  write_text_file(dir / "panel_unchanged.csv", report.panel_csv(false));
}

Prediction prediction_from_json(const json& j) {
  try {
    Prediction p;
    p.key = j.at("key").get<std::string>();
    p.mode = j.value("mode", std::string("per-box"));
    p.completion = j.value("completion", std::string());
    p.status = j.value("status", std::string("ok"));
    p.error = j.value("error", std::string());
    return p;
  } catch (const json::exception& err) {
    throw InvalidArgument(std::string("malformed prediction record: ") + err.what());
  }
}

json prediction_to_json(const Prediction& p) {
  json j{{"key", p.key}, {"mode", p.mode}, {"completion", p.completion}, {"status", p.status}};
  if (!p.error.empty()) j["error"] = p.error;
  return j;
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(prediction_from_json(j)); });
  return out;
}

ScoringResult score_predictions(const std::vector<ClozeExample>& examples, const std::vector<Prediction>& preds,
                                const Lexicon& lex) {
  std::unordered_map<std::string, const Prediction*> by_key;
  for (const auto& p : preds) by_key[p.key] = &p;
  std::unordered_map<std::string, ParsedBoxes> all_box_cache;

  ScoringResult result;
  result.scored.reserve(examples.size());
  for (const auto& ex : examples) {
    ScoredExample s{ex.key(), ex.meta, false};
    const Prediction* pred = nullptr;
    ParsedBoxes parsed;
    if (auto it = by_key.find(ex.key()); it != by_key.end()) {
      pred = it->second;
      if (pred->status == "ok") parsed = parse_all_boxes(pred->completion, lex, lex.nouns(), ex.box);
    } else if (auto st = by_key.find(ex.state_key()); st != by_key.end()) {
      pred = st->second;
      if (pred->status == "ok") {
        auto cached = all_box_cache.find(ex.state_key());
        if (cached == all_box_cache.end()) {
          cached = all_box_cache.emplace(ex.state_key(), parse_all_boxes(pred->completion, lex, lex.nouns(), 0)).first;
        }
        parsed = cached->second;
      }
    }
    if (!pred) {
      ++result.missing;
    } else if (pred->status != "ok") {
      ++result.errored;
    } else if (parsed.has(ex.box)) {
      const bool residual = parsed.residual[ex.box];
      if (residual) ++result.residual;
      s.correct = score_example(parsed.boxes[ex.box], residual, ex.gold);
    }
    result.scored.push_back(std::move(s));
  }
  return result;
}

BaselineKind baseline_kind_from_string(std::string_view text) {
  if (text == "random") return BaselineKind::Random;
  if (text == "repeat-initial") return BaselineKind::RepeatInitial;
  if (text == "full-random") return BaselineKind::FullRandom;
  throw ConfigError("unknown baseline kind '" + std::string(text) + "' (expected random, repeat-initial, full-random)");
}

std::vector<Prediction> run_baseline(const std::vector<ClozeExample>& examples, BaselineKind kind, const Lexicon& lex,
                                     std::uint64_t seed) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    Rng rng(derive_seed(seed, i));
    BoxContents objs;
    switch (kind) {
      case BaselineKind::Random:
        objs = baseline_random(ex, lex, rng);
        break;
      case BaselineKind::RepeatInitial:
        objs = baseline_repeat_initial(ex, lex);
        break;
      case BaselineKind::FullRandom:
        objs = baseline_full_random(ex, lex, rng);
        break;
    }
    out.push_back({ex.key(), "per-box", completion_for(objs, lex), "ok", ""});
  }
  return out;
}

std::map<std::pair<int, bool>, double> random_baseline_stratum_accuracy(const std::vector<ClozeExample>& examples,
                                                                        const Lexicon& lex, std::uint64_t seed,
                                                                        std::size_t min_draws_per_stratum) {
  std::map<std::pair<int, bool>, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    strata[{examples[i].meta.ops_affecting, examples[i].meta.changed}].push_back(i);
  }
  std::map<std::pair<int, bool>, double> out;
  for (const auto& [key, members] : strata) {
    const std::size_t draws = std::max<std::size_t>(1, (min_draws_per_stratum + members.size() - 1) / members.size());
    std::size_t hits = 0;
    for (auto i : members) {
      const auto& ex = examples[i];
      const auto pool = box_mention_pool(ex, lex);
      Rng rng(derive_seed(seed, i));
      for (std::size_t d = 0; d < draws; ++d) {
        hits += same_contents(draw_zero_to_three(pool, rng), ex.gold) ? 1 : 0;
      }
    }
    out[key] = static_cast<double>(hits) / static_cast<double>(draws * members.size());
  }
  return out;
}

}  // namespace boxtrack
