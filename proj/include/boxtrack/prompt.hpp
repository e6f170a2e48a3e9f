#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "boxtrack/lexicon.hpp"

namespace boxtrack {

enum class PromptMode { AllBoxes, PerBox };
enum class DemoSource { Matched, AltForm };

/// Two-shot completion prompt layout. Demonstrations are verbatim text
/// assets; only the test description (and box number) vary.
struct PromptSpec {
  PromptMode mode = PromptMode::AllBoxes;
  DemoSource demos = DemoSource::Matched;

  /// "all-boxes" | "per-box", "matched" | "altform". Throws ConfigError.
  static PromptSpec parse(std::string_view mode, std::string_view demos);

  /// The template with {description} / {boxnum} placeholders. Throws
  /// ConfigError for combinations without demonstrations (per-box AltForm).
  std::string_view layout() const;
  /// First line of the layout.
  std::string instruction() const;
};

std::string_view to_string(PromptMode mode) noexcept;
std::string_view to_string(DemoSource demos) noexcept;

std::string build_prompt(const PromptSpec& spec, const ClozeExample& example);

struct PromptRecord {
  std::string key;   // example key (per-box) or state key (all-boxes)
  std::string mode;  // "per-box" | "all-boxes"
  std::string prompt;
};

/// All-boxes mode emits one prompt per description state, in first-appearance order.
std::vector<PromptRecord> build_prompts(const PromptSpec& spec, const std::vector<ClozeExample>& examples);

json prompt_record_to_json(const PromptRecord& r);
PromptRecord prompt_record_from_json(const json& j);
void write_prompts(const std::filesystem::path& path, const std::vector<PromptRecord>& prompts);
std::vector<PromptRecord> read_prompts(const std::filesystem::path& path);

}  // namespace boxtrack
