// One line per acceptance criterion; exit status is the number of failures.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "boxtrack/errors.hpp"
#include "boxtrack/mock_server.hpp"
#include "boxtrack/pipeline.hpp"
#include "boxtrack/prompt.hpp"
#include "boxtrack/runner.hpp"
#include "boxtrack/scenario_io.hpp"
#include "boxtrack/scorer.hpp"
#include "boxtrack/splitter.hpp"
#include "fixtures.hpp"
#include "goldens.hpp"
#include "naive_replay.hpp"

using namespace boxtrack;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok_ = false;
      if (failures_.size() < 5) failures_.push_back(what);
    }
  }
  void note(const std::string& text) { notes_ += (notes_.empty() ? "" : "; ") + text; }
  Outcome done() const {
    std::string detail = notes_;
    for (const auto& f : failures_) detail += (detail.empty() ? "" : "; ") + ("FAILED " + f);
    return {ok_, detail};
  }

 private:
  bool ok_ = true;
  std::vector<std::string> failures_;
  std::string notes_;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string join_set(const std::set<std::string>& s) {
  std::string out = "{";
  for (const auto& x : s) out += (out.size() > 1 ? "," : "") + x;
  return out + "}";
}

const SplitExamples& split_of(SplitKind kind) {
  static std::map<SplitKind, SplitExamples> cache;
  auto it = cache.find(kind);
  if (it != cache.end()) return it->second;
  const auto& corpus = fixtures::default_corpus();
  const RunConfig cfg = parse_run_config("");
  const auto partition = partition_by_signature(corpus, cfg.ratios, cfg.effective_split_seed());
  return cache.emplace(kind, build_split(SplitSpec::for_kind(kind), corpus, partition, cfg.world)).first->second;
}

std::vector<std::string> state_descriptions(const std::vector<ClozeExample>& examples) {
  std::set<std::string> seen;
  std::vector<std::string> out;
  for (const auto& ex : examples) {
    if (seen.insert(ex.state_key()).second) out.push_back(ex.description);
  }
  return out;
}

std::set<std::string> token_set(const std::vector<std::string>& texts) {
  std::set<std::string> out;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) {
      if (std::any_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isalpha(c); })) out.insert(tok);
    }
  }
  return out;
}

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
  std::set<std::string> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
  return out;
}

// 1. Dataset statistics.
Outcome dataset_statistics() {
  Checker c;
  fixtures::TempDir dir;
  RunConfig cfg = parse_run_config("");
  cfg.out_dir = dir.path();
  const json m = run_pipeline(cfg);
  const auto& counts = m["split"]["counts"];
  c.expect(m["counts"]["scenarios"] == 2200, "2200 scenarios");
  c.expect(counts["scenarios"]["train"] == 990 && counts["scenarios"]["dev"] == 220 && counts["scenarios"]["test"] == 990,
           "990/220/990 scenarios");
  c.expect(counts["examples"]["train"] == 90090 && counts["examples"]["dev"] == 20020 &&
               counts["examples"]["test"] == 90090,
           "90090/20020/90090 examples");
  c.expect(m["counts"]["questions_per_scenario"] == 91, "91 questions per scenario");
  c.note("scenarios " + counts["scenarios"]["train"].dump() + "/" + counts["scenarios"]["dev"].dump() + "/" +
         counts["scenarios"]["test"].dump() + ", examples " + counts["examples"]["train"].dump() + "/" +
         counts["examples"]["dev"].dump() + "/" + counts["examples"]["test"].dump());

  const auto& numops = split_of(SplitKind::NumOps);
  c.expect(numops.train.size() == 20790, "NumOps train 20790");
  c.note("numops train " + std::to_string(numops.train.size()));

  for (const auto& sc : fixtures::default_corpus()) {
    if (build_cloze_examples(sc, Lexicon::base()).size() != 91) {
      c.expect(false, sc.id + " has other than 91 questions");
      break;
    }
  }
  const auto demo = build_demo(demo_scenario_matched(), demo_lexicon_matched());
  c.expect(demo.examples.size() == 14, "demo corpus 14 examples");
  c.note("demo 1 scenario / " + std::to_string(demo.examples.size()) + " examples");
  return c.done();
}

// 2. Independent replay equals the simulator on every state.
Outcome oracle_equivalence() {
  Checker c;
  const auto& corpus = fixtures::default_corpus();
  const WorldConfig cfg = fixtures::default_config();
  std::size_t states = 0;
  std::size_t equal = 0;
  for (const auto& sc : corpus) {
    const auto naive = naive::replay(scenario_to_json(sc), cfg.m);
    c.expect(naive.ok, sc.id + ": " + naive.error);
    c.expect(naive.states.size() == sc.states.size(), sc.id + " state count");
    for (std::size_t t = 0; t < std::min(naive.states.size(), sc.states.size()); ++t) {
      ++states;
      naive::State mine;
      for (const auto& b : sc.states[t].boxes()) mine.emplace_back(b.begin(), b.end());
      if (mine == naive.states[t]) ++equal;
      else c.expect(false, sc.id + " differs at t=" + std::to_string(t));
    }
  }
  c.expect(states == 2200 * 13, "2200 x 13 states");
  c.note(std::to_string(equal) + "/" + std::to_string(states) + " states equal");
  return c.done();
}

// 3. No signature shared across any pair of splits, for every split kind.
Outcome signature_disjointness() {
  Checker c;
  const auto& corpus = fixtures::default_corpus();
  const RunConfig cfg = parse_run_config("");
  std::map<std::string, std::string> sig_of;
  for (const auto& sc : corpus) {
    std::string s;
    for (const auto& b : sc.initial.boxes()) s += std::to_string(b.size());
    sig_of[sc.id] = s;
  }
  std::size_t shared_total = 0;
  for (auto kind : {SplitKind::Base, SplitKind::NumOps, SplitKind::Vocab, SplitKind::AltForm, SplitKind::AltFormNumOps}) {
    const auto& ex = split_of(kind);
    std::set<std::string> sides[3];
    const std::vector<ClozeExample>* parts[3] = {&ex.train, &ex.dev, &ex.test};
    for (int i = 0; i < 3; ++i) {
      for (const auto& e : *parts[i]) sides[i].insert(sig_of.at(e.scenario_id));
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        const auto shared = intersect(sides[i], sides[j]).size();
        shared_total += shared;
        c.expect(shared == 0, std::string(to_string(kind)) + " shares " + std::to_string(shared) + " signatures");
      }
    }
  }
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    const auto p = partition_by_signature(corpus, cfg.ratios, seed);
    auto sigs = [&](const std::vector<std::size_t>& idx) {
      std::set<std::string> s;
      for (auto i : idx) s.insert(sig_of.at(corpus[i].id));
      return s;
    };
    const auto a = sigs(p.train), b = sigs(p.dev), d = sigs(p.test);
    const auto shared = intersect(a, b).size() + intersect(a, d).size() + intersect(b, d).size();
    shared_total += shared;
    c.expect(shared == 0, "seed " + std::to_string(seed) + " partition shares signatures");
  }
  c.note("5 split kinds + 3 extra partition seeds, " + std::to_string(shared_total) + " shared signatures");
  return c.done();
}

// 4. Lexical disentanglement.
Outcome lexical_disentanglement() {
  Checker c;
  const std::set<std::string> allowed{"the", "into"};
  // The list conjunction is a function token in both surface forms.
  const std::set<std::string> function_tokens{"and"};
  auto content = [&](const std::set<std::string>& overlap) {
    std::set<std::string> out;
    for (const auto& t : overlap) {
      if (!function_tokens.contains(t)) out.insert(t);
    }
    return out;
  };
  auto subset_of_allowed = [&](const std::set<std::string>& s) {
    return std::all_of(s.begin(), s.end(), [&](const auto& t) { return allowed.contains(t); });
  };

  for (auto kind : {SplitKind::AltForm, SplitKind::AltFormNumOps}) {
    const auto& ex = split_of(kind);
    const auto train = token_set(state_descriptions(ex.train));
    const auto test = token_set(state_descriptions(ex.test));
    const auto overlap = intersect(train, test);
    const auto cont = content(overlap);
    c.expect(subset_of_allowed(cont), std::string(to_string(kind)) + " content overlap " + join_set(cont));
    c.note(std::string(to_string(kind)) + " content overlap " + join_set(cont) + " (raw " + join_set(overlap) + ")");
  }

  {
    const auto& ex = split_of(SplitKind::Vocab);
    std::set<std::string> nouns;
    for (const auto& n : bnc_nouns()) nouns.insert(n);
    for (const auto& n : rare_nouns()) nouns.insert(n);
    const auto train = intersect(token_set(state_descriptions(ex.train)), nouns);
    const auto test = intersect(token_set(state_descriptions(ex.test)), nouns);
    const auto overlap = intersect(train, test);
    c.expect(overlap.empty(), "vocab noun overlap " + join_set(overlap));
    c.note("vocab noun overlap " + join_set(overlap) + " over " + std::to_string(train.size()) + "/" +
           std::to_string(test.size()) + " nouns");
  }

  {
    const auto demo = build_demo(demo_scenario_altform(), demo_lexicon_altform());
    const auto demo_tokens = token_set(demo.descriptions);
    const auto test = token_set(state_descriptions(split_of(SplitKind::Base).test));
    const auto overlap = intersect(demo_tokens, test);
    const auto cont = content(overlap);
    c.expect(subset_of_allowed(cont), "altform prompt content overlap " + join_set(cont));
    c.note("altform demos vs base test content overlap " + join_set(cont) + " (raw " + join_set(overlap) + ")");
  }
  return c.done();
}

std::string object_list(const BoxContents& objs, const std::string& sep) {
  if (objs.empty()) return " nothing";
  std::string out;
  for (std::size_t i = 0; i < objs.size(); ++i) out += (i ? sep : std::string(" ")) + "the " + objs[i];
  return out;
}

// 5. Scorer round-trip and perturbation.
Outcome scorer_round_trip() {
  Checker c;
  Rng rng(5);
  std::size_t gold_total = 0, gold_ok = 0, pert_total = 0, pert_ok = 0, statements = 0, statements_ok = 0;
  const auto& corpus = fixtures::default_corpus();
  for (const Lexicon& lex : {Lexicon::base(), Lexicon::rare()}) {
    const auto& nouns = lex.nouns();
    for (std::size_t s = 0; s < 120; ++s) {
      const Scenario sc = translate_nouns(corpus[s], bnc_nouns(), nouns, fixtures::default_config());
      for (const auto& ex : build_cloze_examples(sc, lex)) {
        for (const std::string sep : {" and ", ", "}) {
          BoxContents order = ex.gold;
          rng.shuffle(order);
          const auto p = parse_all_boxes(object_list(order, sep), lex, nouns, ex.box);
          ++gold_total;
          if (score_example(p.boxes.at(ex.box), p.residual.at(ex.box), ex.gold)) ++gold_ok;

          std::vector<BoxContents> perturbed;
          std::string other;
          do {
            other = nouns[rng.uniform_index(nouns.size())];
          } while (std::find(order.begin(), order.end(), other) != order.end());
          if (!order.empty()) {
            BoxContents sub = order;
            sub[rng.uniform_index(sub.size())] = other;
            perturbed.push_back(sub);
            BoxContents drop = order;
            drop.erase(drop.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(drop.size())));
            perturbed.push_back(drop);
          }
          BoxContents add = order;
          add.insert(add.begin() + static_cast<std::ptrdiff_t>(rng.uniform_index(add.size() + 1)), other);
          perturbed.push_back(add);
          for (const auto& bad : perturbed) {
            const auto q = parse_all_boxes(object_list(bad, sep), lex, nouns, ex.box);
            ++pert_total;
            if (score_example(q.boxes.at(ex.box), q.residual.at(ex.box), ex.gold)) ++pert_ok;
          }
        }
      }
      for (const auto& state : sc.states) {
        const std::string statement = render_statement(state, lex);
        const std::string head = lex.box_label(0) + " contains";
        const auto p = parse_all_boxes(statement.substr(head.size()), lex, nouns, 0);
        for (int b = 0; b < state.num_boxes(); ++b) {
          ++statements;
          if (p.has(b) && score_example(p.boxes.at(b), p.residual.at(b), state.box(b))) ++statements_ok;
        }
      }
    }
  }
  c.expect(gold_total >= 10000, "at least 10^4 gold targets");
  c.expect(gold_ok == gold_total, "gold accuracy " + std::to_string(gold_ok) + "/" + std::to_string(gold_total));
  c.expect(pert_ok == 0, "perturbed accuracy " + std::to_string(pert_ok) + "/" + std::to_string(pert_total));
  c.expect(statements_ok == statements, "full statements " + std::to_string(statements_ok) + "/" + std::to_string(statements));
  c.note("gold " + std::to_string(gold_ok) + "/" + std::to_string(gold_total) + ", perturbed " +
         std::to_string(pert_ok) + "/" + std::to_string(pert_total) + ", all-box statements " +
         std::to_string(statements_ok) + "/" + std::to_string(statements));
  return c.done();
}

// 6. Repeat-initial baseline pattern.
Outcome repeat_initial_pattern() {
  Checker c;
  const auto& test = split_of(SplitKind::Base).test;
  const Lexicon lex = Lexicon::base();
  const auto scoring = score_predictions(test, run_baseline(test, BaselineKind::RepeatInitial, lex, 0), lex);
  const auto report = stratify_and_report(scoring.scored);
  std::size_t changed_rows = 0, unchanged_rows = 0;
  for (const auto& row : report.rows) {
    const double want = row.changed ? 0.0 : 1.0;
    c.expect(row.accuracy == want, "ops " + std::to_string(row.ops_affecting) + (row.changed ? " changed " : " unchanged ") +
                                       fmt("%.4f", row.accuracy));
    (row.changed ? changed_rows : unchanged_rows)++;
  }
  c.expect(scoring.missing == 0 && scoring.errored == 0, "every example scored");
  c.expect(changed_rows >= 5 && unchanged_rows >= 5, "both panels populated");
  c.note(std::to_string(unchanged_rows) + " unchanged strata at 1.0, " + std::to_string(changed_rows) +
         " changed strata at 0.0 over " + std::to_string(scoring.scored.size()) + " examples");
  return c.done();
}

double enumerate_random_baseline(std::size_t pool, std::size_t gold) {
  double p = 0;
  for (std::size_t k0 = 0; k0 <= 3; ++k0) {
    const std::size_t k = std::min(k0, pool);
    if (k != gold) continue;
    double subsets = 0;
    for (std::uint32_t mask = 0; mask < (1u << pool); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) == k) subsets += 1;
    }
    p += 0.25 / subsets;
  }
  return p;
}

// 7. Random baseline stability and the analytic spot check.
Outcome random_baseline_sanity() {
  Checker c;
  const auto& test = split_of(SplitKind::Base).test;
  const Lexicon lex = Lexicon::base();
  std::map<std::pair<int, bool>, std::pair<double, double>> range;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& [key, acc] : random_baseline_stratum_accuracy(test, lex, seed, 20000)) {
      auto [it, fresh] = range.try_emplace(key, acc, acc);
      it->second.first = std::min(it->second.first, acc);
      it->second.second = std::max(it->second.second, acc);
    }
  }
  double worst = 0;
  for (const auto& [key, r] : range) {
    const double spread = r.second - r.first;
    worst = std::max(worst, spread);
    c.expect(spread <= 0.02, "stratum " + std::to_string(key.first) + (key.second ? "c" : "u") + " spread " +
                                 fmt("%.4f", spread));
  }
  c.note(std::to_string(range.size()) + " strata, max spread across 5 seeds " + fmt("%.4f", worst));

  const double exact = enumerate_random_baseline(3, 2);
  c.expect(std::abs(exact - 1.0 / 12.0) < 1e-12, "enumeration gives 1/12");
  const Scenario sc = fixtures::worked_example();
  const Lexicon wlex = fixtures::lexicon_for(sc);
  const auto ex = build_cloze_examples(sc, wlex).at(5 * 7 + 6);
  c.expect(box_mention_pool(ex, wlex).size() == 3 && ex.gold.size() == 2, "pool 3 / gold 2 probe");
  Rng rng(derive_seed(20230105, 7));
  const int draws = 100000;
  int hits = 0;
  for (int i = 0; i < draws; ++i) hits += same_contents(baseline_random(ex, wlex, rng), ex.gold) ? 1 : 0;
  const double mc = static_cast<double>(hits) / draws;
  c.expect(std::abs(mc - exact) <= 0.005, "monte-carlo " + fmt("%.5f", mc));
  c.note("P(correct) exact " + fmt("%.5f", exact) + ", monte-carlo " + fmt("%.5f", mc) + " at 1e5 draws");
  return c.done();
}

// 8. Prompt goldens.
Outcome prompt_goldens() {
  Checker c;
  const Scenario sc = fixtures::worked_example();
  const auto examples = build_cloze_examples(sc, fixtures::lexicon_for(sc));
  const auto& probe = examples.at(5 * 7);
  c.expect(probe.description == goldens::kWorkedDescription, "worked description");
  c.expect(build_prompt(PromptSpec::parse("all-boxes", "matched"), probe) ==
               goldens::all_boxes_matched(goldens::kWorkedDescription),
           "matched all-boxes prompt");
  c.expect(build_prompt(PromptSpec::parse("per-box", "matched"), examples.at(5 * 7 + 2)) ==
               goldens::per_box_matched(goldens::kWorkedDescription, 2),
           "matched per-box prompt");
  c.expect(build_prompt(PromptSpec::parse("all-boxes", "altform"), probe) ==
               goldens::all_boxes_altform(goldens::kWorkedDescription),
           "altform all-boxes prompt");
  c.note("3 prompts byte-equal");
  return c.done();
}

// 9. Runner contract against the mock endpoint.
Outcome runner_contract() {
  Checker c;
  MockCompletionServer::Options opts;
  opts.latency = std::chrono::milliseconds(20);
  MockCompletionServer server([](const json&) { return std::string(" the apple"); }, opts);
  Endpoint ep;
  ep.base_url = server.base_url();
  const DecodeParams params;

  std::vector<PromptRecord> prompts;
  for (int i = 0; i < 40; ++i) prompts.push_back({"k" + std::to_string(i), "per-box", "prompt " + std::to_string(i)});

  fixtures::TempDir dir;
  CompletionCache cache(dir / "cache");
  BatchSummary summary;
  run_batch(prompts, params, ep, 6, &cache, &summary);
  const auto reqs = server.requests();
  c.expect(!reqs.empty(), "requests recorded");
  bool body_ok = !reqs.empty();
  for (const auto& r : reqs) {
    body_ok = body_ok && r.at("temperature") == 0 && r.at("max_tokens") == 150 && r.at("stop") == json::array({"\n"});
  }
  c.expect(body_ok, "temperature 0, max_tokens 150, stop [\\n]");
  c.expect(server.max_in_flight() <= 6, "in flight " + std::to_string(server.max_in_flight()) + " > 6");
  c.expect(server.request_count() == 40 && summary.ok == 40, "40 fresh requests");
  const std::size_t first_peak = server.max_in_flight();

  server.reset_counters();
  BatchSummary again;
  run_batch(prompts, params, ep, 6, &cache, &again);
  c.expect(server.request_count() == 0 && again.cached == 40, "cache prevents duplicate requests");

  CompletionCache reopened(dir / "cache");
  server.reset_counters();
  run_batch(prompts, params, ep, 6, &reopened, nullptr);
  c.expect(server.request_count() == 0, "cache survives restart");

  server.reset_counters();
  std::vector<PromptRecord> fresh;
  for (int i = 0; i < 12; ++i) fresh.push_back({"f" + std::to_string(i), "per-box", "fresh " + std::to_string(i)});
  run_batch(fresh, params, ep, 1, nullptr, nullptr);
  c.expect(server.max_in_flight() == 1, "parallelism 1 keeps one request in flight");

  c.note(std::to_string(reqs.size()) + " requests, peak in flight " + std::to_string(first_peak) +
         " at N=6, second pass 0 requests");
  return c.done();
}

// 10. End-to-end demo pipeline against scripted mocks.
Outcome end_to_end_demo() {
  Checker c;
  fixtures::TempDir dir;
  auto config = [&](const std::string& endpoint, const std::string& sub) {
    RunConfig cfg = parse_run_config("[generate]\ncount = 1\n[split]\nkind = \"demo\"\n");
    cfg.endpoint = endpoint;
    cfg.out_dir = dir / sub;
    return cfg;
  };
  const json gold = run_pipeline(config("mock:gold", "gold"));
  const auto& ev = gold["evaluation"]["model"];
  c.expect(ev["accuracy"] == 1.0 && ev["scored"] == 14, "gold mock accuracy " + ev["accuracy"].dump());

  const json rep = run_pipeline(config("mock:repeat-initial", "repeat"));
  const json report = json::parse(read_text_file(dir / "repeat" / "eval" / "model" / "report.json"));
  std::size_t rows = 0;
  for (const auto& row : report["rows"]) {
    ++rows;
    const double want = row["changed"].get<bool>() ? 0.0 : 1.0;
    c.expect(row["accuracy"].get<double>() == want, "repeat-initial row " + row.dump());
  }
  c.expect(rows >= 2, "repeat-initial report has both panels");
  c.note("gold accuracy " + ev["accuracy"].dump() + " on " + ev["scored"].dump() +
         " examples; repeat-initial strata match the degenerate pattern (" + std::to_string(rows) + " rows)");
  return c.done();
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
  double budget_s;  // 0: no runtime limit
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "dataset statistics", dataset_statistics, 180},
      {2, "oracle equivalence", oracle_equivalence, 60},
      {3, "signature disjointness", signature_disjointness, 0},
      {4, "lexical disentanglement", lexical_disentanglement, 0},
      {5, "scorer round-trip", scorer_round_trip, 0},
      {6, "repeat-initial pattern", repeat_initial_pattern, 0},
      {7, "random baseline sanity", random_baseline_sanity, 0},
      {8, "prompt goldens", prompt_goldens, 0},
      {9, "runner contract", runner_contract, 0},
      {10, "end-to-end demo", end_to_end_demo, 60},
  };
  // Corpus generation is shared by several criteria; time it inside criterion 1.
  int failures = 0;
  for (const auto& cr : criteria) {
    const auto start = Clock::now();
    Outcome out;
    try {
      if (cr.id == 1) (void)fixtures::default_corpus();
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(Clock::now() - start).count();
    if (cr.budget_s > 0 && secs > cr.budget_s) {
      out.ok = false;
      out.detail += "; over the " + fmt("%.0f", cr.budget_s) + " s budget";
    }
    if (!out.ok) ++failures;
    std::printf("[%s] %2d %-24s %7.2fs  %s\n", out.ok ? "PASS" : "FAIL", cr.id, cr.name, secs, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
