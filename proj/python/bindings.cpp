#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "boxtrack/errors.hpp"
#include "boxtrack/pipeline.hpp"
#include "boxtrack/prompt.hpp"
#include "boxtrack/sampler.hpp"
#include "boxtrack/scenario_io.hpp"
#include "boxtrack/scorer.hpp"

namespace py = pybind11;
using namespace boxtrack;

namespace {

WorldConfig world_for(const std::string& nouns) {
  WorldConfig cfg;
  cfg.objects = load_nouns(nouns);
  return cfg;
}

// JSON crosses the boundary as text; the Python wrapper decodes it.
std::vector<std::string> dump_all(const std::vector<json>& items) {
  std::vector<std::string> out;
  out.reserve(items.size());
  for (const auto& j : items) out.push_back(j.dump());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Box-world entity tracking benchmark core";
  m.attr("__version__") = std::string(kVersion);

  auto base = py::register_exception<Error>(m, "BoxtrackError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<TransportError>(m, "TransportError", base.ptr());
  py::register_exception<PreconditionViolation>(m, "PreconditionViolation", base.ptr());

  m.def(
      "generate",
      [](int count, std::uint64_t seed, const std::string& nouns) {
        const auto corpus = generate_corpus(world_for(nouns), count, seed);
        std::vector<json> out;
        for (const auto& sc : corpus) out.push_back(scenario_to_json(sc));
        return dump_all(out);
      },
      py::arg("count"), py::arg("seed"), py::arg("nouns") = "bnc");

  m.def(
      "replay",
      [](const std::string& scenario, const std::string& nouns) {
        const Scenario sc = scenario_from_json(json::parse(scenario), world_for(nouns));
        std::vector<std::vector<BoxContents>> states;
        for (const auto& s : sc.states) states.push_back(s.boxes());
        return states;
      },
      py::arg("scenario"), py::arg("nouns") = "bnc");

  m.def(
      "render",
      [](const std::string& scenario, const std::string& lexicon, std::optional<int> max_t) {
        const Lexicon lex = Lexicon::by_name(lexicon);
        const WorldConfig cfg = world_for("bnc");
        Scenario sc = scenario_from_json(json::parse(scenario), cfg);
        if (lex.nouns() != cfg.objects) sc = translate_nouns(sc, cfg.objects, lex.nouns(), cfg);
        std::vector<json> out;
        for (const auto& ex : build_cloze_examples(sc, lex, max_t)) out.push_back(example_to_json(ex));
        return dump_all(out);
      },
      py::arg("scenario"), py::arg("lexicon") = "base", py::arg("max_t") = py::none());

  m.def(
      "build_prompt",
      [](const std::string& example, const std::string& mode, const std::string& demos) {
        return build_prompt(PromptSpec::parse(mode, demos), example_from_json(json::parse(example)));
      },
      py::arg("example"), py::arg("mode") = "all-boxes", py::arg("demos") = "matched");

  m.def(
      "score_completion",
      [](const std::string& completion, const BoxContents& gold, int box, const std::string& lexicon) {
        const Lexicon lex = Lexicon::by_name(lexicon);
        const auto parsed = parse_all_boxes(completion, lex, lex.nouns(), box);
        return parsed.has(box) && score_example(parsed.boxes.at(box), parsed.residual.at(box), gold);
      },
      py::arg("completion"), py::arg("gold"), py::arg("box"), py::arg("lexicon") = "base");

  m.def(
      "wilson_interval",
      [](std::size_t successes, std::size_t trials, double z) {
        const auto ci = wilson_interval(successes, trials, z);
        return std::make_pair(ci.low, ci.high);
      },
      py::arg("successes"), py::arg("trials"), py::arg("z") = kZ95);

  m.def(
      "run_pipeline",
      [](const std::string& config_toml, const std::vector<std::string>& overrides) {
        const RunConfig cfg = parse_run_config(config_toml, overrides);
        py::gil_scoped_release release;
        return run_pipeline(cfg).dump();
      },
      py::arg("config_toml") = "", py::arg("overrides") = std::vector<std::string>{});

  m.def(
      "validate",
      [](const std::string& artifact_dir, const std::string& nouns) {
        const auto report = validate_artifact_dir(artifact_dir, world_for(nouns));
        return report.to_json().dump();
      },
      py::arg("artifact_dir"), py::arg("nouns") = "bnc");
}
