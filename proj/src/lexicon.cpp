#include "boxtrack/lexicon.hpp"

#include <cctype>

#include "boxtrack/assets.hpp"
#include "boxtrack/errors.hpp"

namespace boxtrack {

namespace {

std::string substitute(std::string text, std::string_view key, std::string_view value) {
  for (auto pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos + value.size())) {
    text.replace(pos, key.size(), value);
  }
  return text;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string box_clause(const std::string& pattern, const std::string& label, const std::string& objs) {
  return substitute(substitute(pattern, "{box}", label), "{objs}", objs);
}

}  // namespace

const Templates& Templates::base() {
  static const Templates t{
      .initial_single = "{box} contains {objs}",
      .initial_plural = "{box} contains {objs}",
      .initial_empty = "{box} contains nothing",
      .put = "Put {objs} into {box}.",
      .remove = "Remove {objs} from {box}.",
      .move_single = "Move {objs} from {src} to {dst}.",
      .move_plural = "Move {objs} from {src} to {dst}.",
      .statement = "{box} contains {objs}",
      .statement_empty = "{box} contains nothing",
      .empty_phrase = "nothing",
      .list_conjunction = " and ",
      .determiner = "the",
  };
  return t;
}

const Templates& Templates::altform() {
  static const Templates t{
      .initial_single = "{objs} is in {box}",
      .initial_plural = "{objs} are in {box}",
      .initial_empty = "{box} is empty",
      .put = "Place {objs} inside {box}.",
      .remove = "Take {objs} out of {box}.",
      .move_single = "Pick up {objs} in {src} and place it into {dst}.",
      .move_plural = "Pick up {objs} in {src} and place them into {dst}.",
      .statement = "{box} contains {objs}",
      .statement_empty = "{box} contains nothing",
      .empty_phrase = "nothing",
      .list_conjunction = " and ",
      .determiner = "the",
  };
  return t;
}

Lexicon::Lexicon(std::string name, SurfaceForm form, std::vector<std::string> nouns)
    : name_(std::move(name)), form_(form), nouns_(std::move(nouns)), noun_set_(nouns_.begin(), nouns_.end()) {}

std::vector<std::string> bnc_nouns() { return asset_lines("lexicons/bnc.txt"); }
std::vector<std::string> rare_nouns() { return asset_lines("lexicons/rare.txt"); }

Lexicon Lexicon::base() { return Lexicon("base", SurfaceForm::Base, bnc_nouns()); }
Lexicon Lexicon::altform() { return Lexicon("altform", SurfaceForm::AltForm, rare_nouns()); }
Lexicon Lexicon::rare() { return Lexicon("rare", SurfaceForm::Base, rare_nouns()); }

Lexicon Lexicon::by_name(std::string_view name) {
  if (name == "base") return base();
  if (name == "altform") return altform();
  if (name == "rare") return rare();
  throw ConfigError("unknown lexicon '" + std::string(name) + "' (expected base, altform or rare)");
}

Lexicon Lexicon::custom(std::string name, SurfaceForm form, std::vector<std::string> nouns) {
  return Lexicon(std::move(name), form, std::move(nouns));
}

std::string Lexicon::box_label(int box) const {
  if (form_ == SurfaceForm::Base) return "Box " + std::to_string(box);
  if (box < 0 || box >= 26) throw RenderError("no container label for box " + std::to_string(box));
  return std::string("Container ") + static_cast<char>('A' + box);
}

std::string render_objects(const BoxContents& objs, const Lexicon& lex) {
  const auto& tpl = lex.templates();
  std::string out;
  for (std::size_t i = 0; i < objs.size(); ++i) {
    if (!lex.has_noun(objs[i])) {
      throw RenderError("noun '" + objs[i] + "' is not in lexicon '" + lex.name() + "'");
    }
    if (i) out += tpl.list_conjunction;
    out += tpl.determiner + " " + objs[i];
  }
  return out;
}

std::string render_initial(const WorldState& state, const Lexicon& lex) {
  const auto& tpl = lex.templates();
  std::string out;
  for (int b = 0; b < state.num_boxes(); ++b) {
    const auto& objs = state.box(b);
    const std::string& pattern =
        objs.empty() ? tpl.initial_empty : (objs.size() == 1 ? tpl.initial_single : tpl.initial_plural);
    if (b) out += ", ";
    out += box_clause(pattern, lex.box_label(b), render_objects(objs, lex));
  }
  return capitalize(out) + ".";
}

std::string render_op(const Operation& op, const Lexicon& lex) {
  const auto& tpl = lex.templates();
  const std::string objs = render_objects(op.objects(), lex);
  switch (op.kind()) {
    case OpKind::Put:
      return box_clause(tpl.put, lex.box_label(*op.dst()), objs);
    case OpKind::Remove:
      return box_clause(tpl.remove, lex.box_label(*op.src()), objs);
    case OpKind::Move: {
      const auto& pattern = op.objects().size() == 1 ? tpl.move_single : tpl.move_plural;
      return substitute(substitute(substitute(pattern, "{objs}", objs), "{src}", lex.box_label(*op.src())), "{dst}",
                        lex.box_label(*op.dst()));
    }
  }
  throw RenderError("unknown operation kind");
}

std::string render_target(const WorldState& state, int box, const Lexicon& lex) {
  const auto& objs = state.box(box);
  if (objs.empty()) return "contains " + lex.templates().empty_phrase;
  return "contains " + render_objects(objs, lex);
}

std::string render_statement(const WorldState& state, const Lexicon& lex) {
  const auto& tpl = lex.templates();
  std::string out;
  for (int b = 0; b < state.num_boxes(); ++b) {
    const auto& objs = state.box(b);
    if (b) out += ", ";
    out += box_clause(objs.empty() ? tpl.statement_empty : tpl.statement, lex.box_label(b), render_objects(objs, lex));
  }
  return out + ".";
}

std::string render_description(const Scenario& scenario, int t, const Lexicon& lex) {
  if (t < 0 || t > scenario.num_ops()) throw InvalidArgument("prefix length out of range");
  std::string out = render_initial(scenario.initial, lex);
  for (int s = 0; s < t; ++s) out += " " + render_op(scenario.ops[static_cast<std::size_t>(s)], lex);
  return out;
}

std::string ClozeExample::key() const { return state_key() + ":" + std::to_string(box); }

std::string ClozeExample::state_key() const { return scenario_id + ":" + std::to_string(t); }

std::vector<ClozeExample> build_cloze_examples(const Scenario& scenario, const Lexicon& lex, std::optional<int> max_t) {
  const int last = max_t ? std::min(*max_t, scenario.num_ops()) : scenario.num_ops();
  std::vector<ClozeExample> out;
  out.reserve(static_cast<std::size_t>((last + 1) * scenario.num_boxes()));
  std::string description = render_initial(scenario.initial, lex);
  for (int t = 0; t <= last; ++t) {
    if (t > 0) description += " " + render_op(scenario.ops[static_cast<std::size_t>(t - 1)], lex);
    const auto& state = scenario.states[static_cast<std::size_t>(t)];
    for (int b = 0; b < scenario.num_boxes(); ++b) {
      ClozeExample ex;
      ex.scenario_id = scenario.id;
      ex.t = t;
      ex.box = b;
      ex.description = description;
      ex.query_prefix = lex.box_label(b) + " contains";
      ex.gold = state.box(b);
      ex.meta = {ops_affecting_box(scenario, t, b), changed_from_initial(scenario, t, b), lex.name()};
      out.push_back(std::move(ex));
    }
  }
  return out;
}

json example_to_json(const ClozeExample& ex) {
  return json{{"scenario_id", ex.scenario_id},
              {"t", ex.t},
              {"box", ex.box},
              {"description", ex.description},
              {"query_prefix", ex.query_prefix},
              {"gold", ex.gold},
              {"meta", {{"ops_affecting", ex.meta.ops_affecting}, {"changed", ex.meta.changed},
                        {"lexicon", ex.meta.lexicon}}}};
}

ClozeExample example_from_json(const json& j) {
  try {
    ClozeExample ex;
    ex.scenario_id = j.at("scenario_id").get<std::string>();
    ex.t = j.at("t").get<int>();
    ex.box = j.at("box").get<int>();
    ex.description = j.at("description").get<std::string>();
    ex.query_prefix = j.at("query_prefix").get<std::string>();
    ex.gold = j.at("gold").get<BoxContents>();
    const auto& meta = j.at("meta");
    ex.meta = {meta.at("ops_affecting").get<int>(), meta.at("changed").get<bool>(),
               meta.at("lexicon").get<std::string>()};
    return ex;
  } catch (const json::exception& err) {
    throw InvalidArgument(std::string("malformed example record: ") + err.what());
  }
}

std::vector<ClozeExample> read_examples(const std::filesystem::path& path) {
  std::vector<ClozeExample> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    try {
      out.push_back(example_from_json(j));
    } catch (const Error& err) {
      throw InvalidArgument(path.string() + ":" + std::to_string(line) + ": " + err.what());
    }
  });
  return out;
}

void write_examples(const std::filesystem::path& path, const std::vector<ClozeExample>& examples) {
  JsonlWriter w(path);
  for (const auto& ex : examples) w.write(example_to_json(ex));
  w.flush();
}

Scenario translate_nouns(const Scenario& scenario, const std::vector<std::string>& from,
                         const std::vector<std::string>& to, const WorldConfig& cfg) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < from.size(); ++i) index.emplace(from[i], i);
  auto map_one = [&](const Object& o) -> Object {
    auto it = index.find(o);
    if (it == index.end() || it->second >= to.size()) {
      throw RenderError("cannot translate noun '" + o + "' in scenario '" + scenario.id + "'");
    }
    return to[it->second];
  };
  auto map_all = [&](const std::vector<Object>& objs) {
    std::vector<Object> out;
    out.reserve(objs.size());
    for (const auto& o : objs) out.push_back(map_one(o));
    return out;
  };
  std::vector<BoxContents> boxes;
  for (const auto& b : scenario.initial.boxes()) boxes.push_back(map_all(b));
  std::vector<Operation> ops;
  for (const auto& op : scenario.ops) {
    switch (op.kind()) {
      case OpKind::Put:
        ops.push_back(Operation::put(map_all(op.objects()), *op.dst()));
        break;
      case OpKind::Remove:
        ops.push_back(Operation::remove(map_all(op.objects()), *op.src()));
        break;
      case OpKind::Move:
        ops.push_back(Operation::move(map_all(op.objects()), *op.src(), *op.dst()));
        break;
    }
  }
  return Scenario::build(scenario.id, WorldState(std::move(boxes)), std::move(ops), cfg);
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    while (!cur.empty() && cur.back() == '-') cur.pop_back();
    std::size_t lead = cur.find_first_not_of('-');
    if (lead != std::string::npos) out.push_back(cur.substr(lead));
    cur.clear();
  };
  for (char c : text) {
    auto u = static_cast<unsigned char>(c);
    if (std::isalnum(u) || c == '-') {
      cur += static_cast<char>(std::tolower(u));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace boxtrack
