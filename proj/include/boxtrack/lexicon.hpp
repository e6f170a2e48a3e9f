#pragma once

// Surface forms: turning scenarios into descriptions and cloze examples.

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "boxtrack/jsonl.hpp"
#include "boxtrack/world.hpp"

namespace boxtrack {

enum class SurfaceForm { Base, AltForm };

/// Sentence templates. Placeholders: {objs}, {box}, {src}, {dst}.
struct Templates {
  std::string initial_single;  // one object in a box
  std::string initial_plural;
  std::string initial_empty;
  std::string put;
  std::string remove;
  std::string move_single;
  std::string move_plural;
  std::string statement;        // "{box} contains {objs}"
  std::string statement_empty;  // "{box} contains nothing"
  std::string empty_phrase;     // "nothing"
  std::string list_conjunction; // " and "
  std::string determiner;       // "the"

  static const Templates& base();
  static const Templates& altform();
};

class Lexicon {
 public:
  /// Base templates with the bundled frequent-noun list.
  static Lexicon base();
  /// AltForm templates with the bundled rare-noun list.
  static Lexicon altform();
  /// Base templates with the rare-noun list (Vocab split training side).
  static Lexicon rare();
  /// "base" | "altform" | "rare". Throws ConfigError otherwise.
  static Lexicon by_name(std::string_view name);
  static Lexicon custom(std::string name, SurfaceForm form, std::vector<std::string> nouns);

  const std::string& name() const noexcept { return name_; }
  SurfaceForm form() const noexcept { return form_; }
  const std::vector<std::string>& nouns() const noexcept { return nouns_; }
  const Templates& templates() const noexcept {
    return form_ == SurfaceForm::Base ? Templates::base() : Templates::altform();
  }
  bool has_noun(std::string_view noun) const { return noun_set_.contains(std::string(noun)); }

  /// "Box 3" or "Container D".
  std::string box_label(int box) const;

 private:
  Lexicon(std::string name, SurfaceForm form, std::vector<std::string> nouns);

  std::string name_;
  SurfaceForm form_;
  std::vector<std::string> nouns_;
  std::unordered_set<std::string> noun_set_;
};

std::vector<std::string> bnc_nouns();
std::vector<std::string> rare_nouns();

/// "the x and the y". Throws RenderError for nouns outside the lexicon.
std::string render_objects(const BoxContents& objs, const Lexicon& lex);
std::string render_initial(const WorldState& state, const Lexicon& lex);
std::string render_op(const Operation& op, const Lexicon& lex);
/// "contains the x and the y" / "contains nothing".
std::string render_target(const WorldState& state, int box, const Lexicon& lex);
/// Statement about every box, e.g. "Box 0 contains the plane, ..., Box 6 contains the bottle."
std::string render_statement(const WorldState& state, const Lexicon& lex);
/// Initial description followed by the first t operation sentences.
std::string render_description(const Scenario& scenario, int t, const Lexicon& lex);

struct ExampleMeta {
  int ops_affecting = 0;
  bool changed = false;
  std::string lexicon;

  friend bool operator==(const ExampleMeta&, const ExampleMeta&) = default;
};

struct ClozeExample {
  std::string scenario_id;
  int t = 0;
  int box = 0;
  std::string description;
  std::string query_prefix;
  BoxContents gold;
  ExampleMeta meta;

  /// "<scenario>:<t>:<box>"
  std::string key() const;
  /// "<scenario>:<t>", shared by every box of one description prefix.
  std::string state_key() const;

  friend bool operator==(const ClozeExample&, const ClozeExample&) = default;
};

/// One example per (t, box), t-major. `max_t` caps the prefix length.
std::vector<ClozeExample> build_cloze_examples(const Scenario& scenario, const Lexicon& lex,
                                               std::optional<int> max_t = std::nullopt);

json example_to_json(const ClozeExample& ex);
ClozeExample example_from_json(const json& j);
std::vector<ClozeExample> read_examples(const std::filesystem::path& path);
void write_examples(const std::filesystem::path& path, const std::vector<ClozeExample>& examples);

/// Relabels every object through from[i] -> to[i]. Throws RenderError if an
/// object is missing from `from` or `to` is shorter.
Scenario translate_nouns(const Scenario& scenario, const std::vector<std::string>& from,
                         const std::vector<std::string>& to, const WorldConfig& cfg);

/// Lowercased tokens; hyphens stay inside tokens ("flav-r-straw").
std::vector<std::string> tokenize(std::string_view text);

}  // namespace boxtrack
