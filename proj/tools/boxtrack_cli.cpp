#include <atomic>
#include <chrono>
#include <csignal>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "boxtrack/errors.hpp"
#include "boxtrack/mock_server.hpp"
#include "boxtrack/pipeline.hpp"
#include "boxtrack/sampler.hpp"
#include "boxtrack/scenario_io.hpp"
#include "boxtrack/scorer.hpp"

namespace fs = std::filesystem;
using namespace boxtrack;

namespace {

std::atomic<bool> g_stop{false};

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "TOML configuration file");
  cmd->add_option("--set", c.sets, "Override a config key, section.key=value");
}

// Flags given on the command line become overrides applied after --set.
RunConfig resolve(const Common& c, const std::vector<std::string>& flags) {
  std::vector<std::string> all = c.sets;
  all.insert(all.end(), flags.begin(), flags.end());
  return c.config.empty() ? parse_run_config("", all) : load_run_config(c.config, all);
}

template <class T>
void flag_override(std::vector<std::string>& out, const CLI::Option* opt, const std::string& key, const T& value) {
  if (opt->count() == 0) return;
  if constexpr (std::is_convertible_v<T, std::string>) {
    out.push_back(key + "=" + json(std::string(value)).dump());
  } else {
    out.push_back(key + "=" + std::to_string(value));
  }
}

std::string infer_lexicon(const std::vector<ClozeExample>& examples, const std::string& given) {
  if (!given.empty()) return given;
  if (examples.empty()) return "base";
  return examples.front().meta.lexicon;
}

void print_report(const StratifiedReport& report) {
  std::cout << report.to_csv();
  std::cout << "overall accuracy " << report.overall.accuracy << " (" << report.overall.correct << "/"
            << report.overall.count << ", 95% CI " << report.overall.ci_low << " - " << report.overall.ci_high
            << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity-tracking benchmark toolkit: generate box-world scenarios, build splits and prompts, "
               "query completion endpoints, and score the results"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  int status = 0;

  // generate
  Common gen_c;
  int gen_count = 0;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  unsigned gen_threads = 0;
  auto* gen = app.add_subcommand("generate", "Sample a scenario corpus as JSON Lines");
  add_common(gen, gen_c);
  auto* gen_count_opt = gen->add_option("--count", gen_count, "Number of scenarios");
  auto* gen_seed_opt = gen->add_option("--seed", gen_seed, "Master seed");
  gen->add_option("--out", gen_out, "Output scenarios.jsonl")->required();
  gen->add_option("--threads", gen_threads, "Worker threads (0 = hardware)");
  gen->callback([&] {
    std::vector<std::string> flags;
    flag_override(flags, gen_count_opt, "generate.count", gen_count);
    flag_override(flags, gen_seed_opt, "generate.seed", std::to_string(gen_seed));
    const auto cfg = resolve(gen_c, flags);
    const auto corpus = generate_corpus(cfg.world, cfg.count, cfg.seed, gen_threads);
    write_scenarios(gen_out, corpus);
    std::cerr << "wrote " << corpus.size() << " scenarios to " << gen_out << "\n";
  });

  // split
  Common split_c;
  std::string split_kind, split_scenarios, split_outdir;
  std::uint64_t split_seed = 0;
  int split_train = 0, split_dev = 0, split_test = 0, split_sub = 0;
  auto* split = app.add_subcommand("split", "Partition scenarios by signature and render train/dev/test");
  add_common(split, split_c);
  auto* split_kind_opt = split->add_option("--kind", split_kind, "base|numops|vocab|altform|altform-numops|demo");
  split->add_option("--scenarios", split_scenarios, "Scenario file")->required();
  auto* split_seed_opt = split->add_option("--seed", split_seed, "Partition seed");
  split->add_option("--outdir", split_outdir, "Output directory")->required();
  auto* split_train_opt = split->add_option("--train", split_train, "Train scenarios");
  auto* split_dev_opt = split->add_option("--dev", split_dev, "Dev scenarios");
  auto* split_test_opt = split->add_option("--test", split_test, "Test scenarios");
  auto* split_sub_opt =
      split->add_option("--subsample-per-stratum", split_sub, "Also write an evaluation subsample of the test split");
  split->callback([&] {
    std::vector<std::string> flags;
    flag_override(flags, split_kind_opt, "split.kind", split_kind);
    flag_override(flags, split_seed_opt, "split.seed", std::to_string(split_seed));
    flag_override(flags, split_train_opt, "split.train", split_train);
    flag_override(flags, split_dev_opt, "split.dev", split_dev);
    flag_override(flags, split_test_opt, "split.test", split_test);
    flag_override(flags, split_sub_opt, "split.subsample_per_stratum", split_sub);
    const auto cfg = resolve(split_c, flags);
    const auto corpus = read_scenarios(split_scenarios, cfg.world);
    fs::create_directories(split_outdir);
    std::vector<ClozeExample> test;
    if (cfg.split_kind == "demo") {
      const auto lex = Lexicon::base();
      for (const auto& sc : corpus) {
        const auto demo = build_demo(sc, lex);
        test.insert(test.end(), demo.examples.begin(), demo.examples.end());
      }
      write_examples(fs::path(split_outdir) / "test.jsonl", test);
      json ids = json::array();
      for (const auto& sc : corpus) ids.push_back(sc.id);
      json m{{"kind", "demo"},
             {"train_lexicon", "base"},
             {"test_lexicon", "base"},
             {"counts", {{"scenarios", {{"test", corpus.size()}}}, {"examples", {{"test", test.size()}}}}},
             {"scenario_ids", {{"test", ids}}}};
      write_text_file(fs::path(split_outdir) / "manifest.json", m.dump(2) + "\n");
      std::cout << m["counts"].dump(2) << "\n";
    } else {
      const SplitSpec spec = SplitSpec::for_kind(split_kind_from_string(cfg.split_kind), cfg.ratios);
      const auto partition = partition_by_signature(corpus, cfg.ratios, cfg.effective_split_seed());
      auto examples = build_split(spec, corpus, partition, cfg.world);
      const json m = write_split(split_outdir, spec, corpus, partition, examples);
      std::cout << json{{"counts", m["counts"]}, {"audit", m["audit"]}}.dump(2) << "\n";
      test = std::move(examples.test);
      if (!m["audit"]["signature_disjoint"].get<bool>()) status = 1;
      if (m["audit"].contains("lexical") && !m["audit"]["lexical"]["ok"].get<bool>()) status = 1;
    }
    if (cfg.subsample_per_stratum > 0) {
      const auto sub = build_subsample(test, cfg.subsample_per_stratum, cfg.effective_subsample_seed());
      write_examples(fs::path(split_outdir) / "subsample.jsonl", sub.examples);
      std::cerr << "subsample: " << sub.state_keys.size() << " states, " << sub.scenarios << " scenarios, "
                << sub.examples.size() << " examples\n";
    }
  });

  // render
  Common render_c;
  std::string render_scenarios, render_lexicon = "base", render_out;
  int render_max_t = -1;
  bool render_demo = false;
  auto* render = app.add_subcommand("render", "Render cloze examples for every scenario");
  add_common(render, render_c);
  render->add_option("--scenarios", render_scenarios, "Scenario file")->required();
  render->add_option("--lexicon", render_lexicon, "base|altform|rare");
  render->add_option("--max-t", render_max_t, "Largest prefix length");
  render->add_flag("--demo", render_demo, "Only the two demonstration prefix lengths");
  render->add_option("--out", render_out, "Output examples.jsonl")->required();
  render->callback([&] {
    const auto cfg = resolve(render_c, {});
    const auto corpus = read_scenarios(render_scenarios, cfg.world);
    const Lexicon lex = Lexicon::by_name(render_lexicon);
    const bool translate = lex.nouns() != cfg.world.objects;
    std::vector<ClozeExample> out;
    for (const auto& raw : corpus) {
      const Scenario sc = translate ? translate_nouns(raw, cfg.world.objects, lex.nouns(), cfg.world) : raw;
      auto exs = render_demo ? build_demo(sc, lex).examples
                             : build_cloze_examples(sc, lex, render_max_t < 0 ? std::nullopt
                                                                              : std::optional<int>(render_max_t));
      out.insert(out.end(), exs.begin(), exs.end());
    }
    write_examples(render_out, out);
    std::cerr << "wrote " << out.size() << " examples to " << render_out << "\n";
  });

  // prompt
  std::string prompt_examples, prompt_mode = "all-boxes", prompt_demos = "matched", prompt_out;
  auto* prompt = app.add_subcommand("prompt", "Build two-shot completion prompts");
  prompt->add_option("--examples", prompt_examples, "Examples file")->required();
  prompt->add_option("--mode", prompt_mode, "all-boxes|per-box");
  prompt->add_option("--demos", prompt_demos, "matched|altform");
  prompt->add_option("--out", prompt_out, "Output prompts.jsonl")->required();
  prompt->callback([&] {
    const auto spec = PromptSpec::parse(prompt_mode, prompt_demos);
    const auto prompts = build_prompts(spec, read_examples(prompt_examples));
    write_prompts(prompt_out, prompts);
    std::cerr << "wrote " << prompts.size() << " prompts to " << prompt_out << "\n";
  });

  // run
  Common run_c;
  std::string run_prompts, run_endpoint, run_model, run_cache, run_out;
  int run_parallel = 0, run_max_tokens = 0, run_attempts = 0;
  double run_temperature = 0.0;
  auto* run = app.add_subcommand("run", "Query a completion endpoint for every prompt");
  add_common(run, run_c);
  run->add_option("--prompts", run_prompts, "Prompts file")->required();
  auto* run_endpoint_opt = run->add_option("--endpoint", run_endpoint, "Base URL, e.g. http://127.0.0.1:8080/v1");
  auto* run_model_opt = run->add_option("--model", run_model, "Model name");
  auto* run_parallel_opt = run->add_option("--parallel", run_parallel, "Requests in flight");
  auto* run_cache_opt = run->add_option("--cache", run_cache, "Cache directory");
  auto* run_temp_opt = run->add_option("--temperature", run_temperature, "Sampling temperature");
  auto* run_tokens_opt = run->add_option("--max-tokens", run_max_tokens, "Completion length limit");
  auto* run_attempts_opt = run->add_option("--max-attempts", run_attempts, "Tries per request");
  run->add_option("--out", run_out, "Output predictions.jsonl")->required();
  run->callback([&] {
    std::vector<std::string> flags;
    flag_override(flags, run_endpoint_opt, "run.endpoint", run_endpoint);
    flag_override(flags, run_model_opt, "run.model", run_model);
    flag_override(flags, run_parallel_opt, "run.parallel", run_parallel);
    flag_override(flags, run_cache_opt, "run.cache", run_cache);
    flag_override(flags, run_tokens_opt, "run.max_tokens", run_max_tokens);
    flag_override(flags, run_attempts_opt, "run.max_attempts", run_attempts);
    if (run_temp_opt->count()) flags.push_back("run.temperature=" + json(run_temperature).dump());
    const auto cfg = resolve(run_c, flags);
    if (cfg.endpoint.empty() || cfg.endpoint.starts_with("mock:")) {
      throw ConfigError("run needs an HTTP endpoint (--endpoint or run.endpoint)");
    }
    auto endpoint = Endpoint::from_url(cfg.endpoint);
    endpoint.max_attempts = cfg.max_attempts;
    std::unique_ptr<CompletionCache> cache;
    if (!cfg.cache_dir.empty()) cache = std::make_unique<CompletionCache>(cfg.cache_dir);
    BatchSummary summary;
    const auto records = run_batch(read_prompts(run_prompts), cfg.decode, endpoint, cfg.parallel, cache.get(), &summary);
    write_completion_records(run_out, records);
    std::cerr << summary.ok << "/" << summary.total << " ok, " << summary.cached << " from cache, " << summary.failed
              << " failed\n";
    if (summary.failed > 0) status = 3;
  });

  // score
  std::string score_examples, score_preds, score_lexicon, score_report;
  auto* score = app.add_subcommand("score", "Score predictions and write the stratified report");
  score->add_option("--examples", score_examples, "Examples file")->required();
  score->add_option("--preds", score_preds, "Predictions file")->required();
  score->add_option("--lexicon", score_lexicon, "base|altform|rare (default: from the examples)");
  score->add_option("--report-dir", score_report, "Report directory")->required();
  score->callback([&] {
    const auto examples = read_examples(score_examples);
    const Lexicon lex = Lexicon::by_name(infer_lexicon(examples, score_lexicon));
    const auto result = score_predictions(examples, read_predictions(score_preds), lex);
    const auto report = stratify_and_report(result.scored);
    write_report(report, score_report);
    print_report(report);
    if (result.missing || result.errored) {
      std::cerr << result.missing << " examples without a prediction, " << result.errored
                << " with a failed completion (scored incorrect)\n";
    }
  });

  // baseline
  std::string base_kind, base_examples, base_lexicon, base_out, base_report;
  std::uint64_t base_seed = 0;
  auto* baseline = app.add_subcommand("baseline", "Baseline predictions for every example");
  baseline->add_option("--kind", base_kind, "random|repeat-initial|full-random")->required();
  baseline->add_option("--examples", base_examples, "Examples file")->required();
  baseline->add_option("--lexicon", base_lexicon, "base|altform|rare (default: from the examples)");
  baseline->add_option("--seed", base_seed, "Seed");
  baseline->add_option("--out", base_out, "Output predictions.jsonl")->required();
  baseline->add_option("--report-dir", base_report, "Also score and write a report here");
  baseline->callback([&] {
    const auto examples = read_examples(base_examples);
    const Lexicon lex = Lexicon::by_name(infer_lexicon(examples, base_lexicon));
    const auto preds = run_baseline(examples, baseline_kind_from_string(base_kind), lex, base_seed);
    JsonlWriter w(base_out);
    for (const auto& p : preds) w.write(prediction_to_json(p));
    w.flush();
    if (!base_report.empty()) {
      const auto report = stratify_and_report(score_predictions(examples, preds, lex).scored);
      write_report(report, base_report);
      print_report(report);
    }
  });

  // validate
  Common val_c;
  std::string val_dir, val_scenarios, val_json;
  std::vector<std::string> val_splits;
  auto* validate = app.add_subcommand("validate", "Audit emitted scenarios and splits");
  add_common(validate, val_c);
  validate->add_option("--dir", val_dir, "Artifact directory (scenarios.jsonl and split/*)");
  validate->add_option("--scenarios", val_scenarios, "Scenario file");
  validate->add_option("--split", val_splits, "Split directory (repeatable)");
  validate->add_option("--json", val_json, "Also write the report as JSON");
  validate->callback([&] {
    const auto cfg = resolve(val_c, {});
    AuditReport report;
    if (!val_dir.empty()) {
      report = validate_artifact_dir(val_dir, cfg.world);
    } else if (!val_scenarios.empty()) {
      std::vector<fs::path> dirs(val_splits.begin(), val_splits.end());
      report = validate_dataset(val_scenarios, dirs, cfg.world);
    } else {
      throw ConfigError("validate needs --dir or --scenarios");
    }
    std::cout << report.to_text();
    if (!val_json.empty()) write_text_file(val_json, report.to_json().dump(2) + "\n");
    if (!report.ok()) status = 1;
  });

  // pipeline
  Common pipe_c;
  std::string pipe_out, pipe_endpoint, pipe_kind;
  std::uint64_t pipe_seed = 0;
  auto* pipeline = app.add_subcommand("pipeline", "Run generate, split, render, prompt, run, score end to end");
  add_common(pipeline, pipe_c);
  auto* pipe_out_opt = pipeline->add_option("--out", pipe_out, "Artifact directory");
  auto* pipe_endpoint_opt = pipeline->add_option("--endpoint", pipe_endpoint, "Endpoint URL or mock:gold");
  auto* pipe_kind_opt = pipeline->add_option("--kind", pipe_kind, "Split kind");
  auto* pipe_seed_opt = pipeline->add_option("--seed", pipe_seed, "Master seed");
  pipeline->callback([&] {
    std::vector<std::string> flags;
    flag_override(flags, pipe_out_opt, "output.dir", pipe_out);
    flag_override(flags, pipe_endpoint_opt, "run.endpoint", pipe_endpoint);
    flag_override(flags, pipe_kind_opt, "split.kind", pipe_kind);
    flag_override(flags, pipe_seed_opt, "generate.seed", std::to_string(pipe_seed));
    const auto cfg = resolve(pipe_c, flags);
    const auto manifest = run_pipeline(cfg);
    json evaluation = json::object();
    for (auto& [name, e] : manifest["evaluation"].items()) {
      evaluation[name] = {{"scored", e["scored"]}, {"correct", e["correct"]}, {"accuracy", e["accuracy"]}};
    }
    std::cout << json{{"status", manifest["status"]},
                      {"counts", manifest["counts"]},
                      {"evaluation", evaluation},
                      {"content_hash", manifest["content_hash"]}}
                     .dump(2)
              << "\n";
  });

  // mock-serve
  std::string mock_examples, mock_prompts, mock_behaviour = "gold", mock_reply;
  auto* mock = app.add_subcommand("mock-serve", "Serve scripted completions over the completions wire format");
  mock->add_option("--examples", mock_examples, "Examples file");
  mock->add_option("--prompts", mock_prompts, "Prompts file");
  mock->add_option("--behaviour", mock_behaviour, "gold|repeat-initial");
  mock->add_option("--reply", mock_reply, "Reply for prompts without a script entry");
  mock->callback([&] {
    std::unordered_map<std::string, std::string> script;
    if (!mock_prompts.empty()) {
      if (mock_examples.empty()) throw ConfigError("--prompts needs --examples");
      const auto examples = read_examples(mock_examples);
      const Lexicon lex = Lexicon::by_name(infer_lexicon(examples, ""));
      script = scripted_completions(read_prompts(mock_prompts), examples, lex, mock_behaviour);
    }
    MockCompletionServer server(scripted_responder(std::move(script), mock_reply));
    std::cout << server.base_url() << std::endl;
    std::signal(SIGINT, [](int) { g_stop = true; });
    std::signal(SIGTERM, [](int) { g_stop = true; });
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    std::cerr << server.request_count() << " requests served\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return status;
}
