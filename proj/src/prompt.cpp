#include "boxtrack/prompt.hpp"

#include <unordered_set>

#include "boxtrack/assets.hpp"
#include "boxtrack/errors.hpp"

namespace boxtrack {

namespace {

std::string_view strip_final_newline(std::string_view text) {
  if (!text.empty() && text.back() == '\n') text.remove_suffix(1);
  return text;
}

void replace_all(std::string& text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
}

}  // namespace

std::string_view to_string(PromptMode mode) noexcept { return mode == PromptMode::AllBoxes ? "all-boxes" : "per-box"; }

std::string_view to_string(DemoSource demos) noexcept { return demos == DemoSource::Matched ? "matched" : "altform"; }

PromptSpec PromptSpec::parse(std::string_view mode, std::string_view demos) {
  PromptSpec spec;
  if (mode == "all-boxes" || mode == "all_boxes") {
    spec.mode = PromptMode::AllBoxes;
  } else if (mode == "per-box" || mode == "per_box") {
    spec.mode = PromptMode::PerBox;
  } else {
    throw ConfigError("unknown prompt mode '" + std::string(mode) + "' (expected all-boxes or per-box)");
  }
  if (demos == "matched") {
    spec.demos = DemoSource::Matched;
  } else if (demos == "altform") {
    spec.demos = DemoSource::AltForm;
  } else {
    throw ConfigError("unknown demonstration source '" + std::string(demos) + "' (expected matched or altform)");
  }
  spec.layout();
  return spec;
}

std::string_view PromptSpec::layout() const {
  if (demos == DemoSource::AltForm) {
    if (mode == PromptMode::PerBox) throw ConfigError("AltForm demonstrations exist only for all-boxes prompts");
    return strip_final_newline(asset("prompts/all_boxes_altform.txt"));
  }
  return strip_final_newline(
      asset(mode == PromptMode::AllBoxes ? "prompts/all_boxes_matched.txt" : "prompts/per_box_matched.txt"));
}

std::string PromptSpec::instruction() const {
  auto text = layout();
  return std::string(text.substr(0, text.find('\n')));
}

std::string build_prompt(const PromptSpec& spec, const ClozeExample& example) {
  std::string text(spec.layout());
  replace_all(text, "{boxnum}", std::to_string(example.box));
  replace_all(text, "{description}", example.description);
  return text;
}

std::vector<PromptRecord> build_prompts(const PromptSpec& spec, const std::vector<ClozeExample>& examples) {
  std::vector<PromptRecord> out;
  const std::string mode(to_string(spec.mode));
  if (spec.mode == PromptMode::PerBox) {
    out.reserve(examples.size());
    for (const auto& ex : examples) out.push_back({ex.key(), mode, build_prompt(spec, ex)});
    return out;
  }
  std::unordered_set<std::string> seen;
  for (const auto& ex : examples) {
    if (seen.insert(ex.state_key()).second) out.push_back({ex.state_key(), mode, build_prompt(spec, ex)});
  }
  return out;
}

json prompt_record_to_json(const PromptRecord& r) { return json{{"key", r.key}, {"mode", r.mode}, {"prompt", r.prompt}}; }

PromptRecord prompt_record_from_json(const json& j) {
  try {
    return {j.at("key").get<std::string>(), j.value("mode", std::string("per-box")), j.at("prompt").get<std::string>()};
  } catch (const json::exception& err) {
    throw InvalidArgument(std::string("malformed prompt record: ") + err.what());
  }
}

void write_prompts(const std::filesystem::path& path, const std::vector<PromptRecord>& prompts) {
  JsonlWriter w(path);
  for (const auto& p : prompts) w.write(prompt_record_to_json(p));
  w.flush();
}

std::vector<PromptRecord> read_prompts(const std::filesystem::path& path) {
  std::vector<PromptRecord> out;
  for_each_jsonl(path, [&](const json& j, std::size_t) { out.push_back(prompt_record_from_json(j)); });
  return out;
}

}  // namespace boxtrack
