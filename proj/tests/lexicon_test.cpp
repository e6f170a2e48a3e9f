#include "boxtrack/lexicon.hpp"

#include <set>

#include "boxtrack/errors.hpp"
#include "boxtrack/splitter.hpp"
#include "doctest.h"
#include "fixtures.hpp"
#include "goldens.hpp"

using namespace boxtrack;

namespace {

std::set<std::string> template_words(const Templates& t) {
  std::set<std::string> out;
  for (const auto* s : {&t.initial_single, &t.initial_plural, &t.initial_empty, &t.put, &t.remove, &t.move_single,
                        &t.move_plural, &t.list_conjunction, &t.determiner}) {
    std::string cleaned = *s;
    for (const char* ph : {"{objs}", "{box}", "{src}", "{dst}"}) {
      for (auto p = cleaned.find(ph); p != std::string::npos; p = cleaned.find(ph)) cleaned.erase(p, std::string(ph).size());
    }
    for (auto& tok : tokenize(cleaned)) out.insert(tok);
  }
  return out;
}

}  // namespace

TEST_SUITE("lexicon") {

TEST_CASE("worked example renders to the reference input text") {
  const Scenario sc = fixtures::worked_example();
  const Lexicon lex = fixtures::lexicon_for(sc);
  CHECK(render_description(sc, 5, lex) == goldens::kWorkedDescription);
  const auto examples = build_cloze_examples(sc, lex);
  const auto& ex = examples.at(5 * 7 + 6);
  CHECK(ex.t == 5);
  CHECK(ex.box == 6);
  CHECK(ex.query_prefix == "Box 6 contains");
  CHECK(ex.key() == "worked-example:5:6");
  CHECK(ex.state_key() == "worked-example:5");
  CHECK(same_contents(ex.gold, {"guitar", "knife"}));
  CHECK(ex.meta.ops_affecting == 2);
  CHECK(ex.meta.changed);
}

TEST_CASE("matched demonstrations restate the description at t = 0 and track it at t = 6") {
  const Scenario sc = demo_scenario_matched();
  const Lexicon lex = demo_lexicon_matched();
  CHECK(render_description(sc, 0, lex) == render_statement(sc.states[0], lex));
  CHECK(render_statement(sc.states[6], lex) ==
        "Box 0 contains the plane, Box 1 contains the cross, Box 2 contains the bag and the machine and the map, Box 3 "
        "contains the coat, Box 4 contains nothing, Box 5 contains the apple and the cash and the glass, Box 6 contains "
        "the bottle.");
  CHECK(render_target(sc.states[6], 4, lex) == "contains nothing");
  CHECK(render_target(sc.states[6], 2, lex) == "contains the bag and the machine and the map");
}

TEST_CASE("altform demonstration renders the alternate surface forms") {
  const Scenario sc = demo_scenario_altform();
  const Lexicon lex = demo_lexicon_altform();
  // The reference text writes one label in lowercase; the renderer always capitalizes.
  std::string expected =
      "The biscotti is in Container A, the icicle is in Container B, the granite and the machine are in Container C, "
      "the folio and the encyclopedia are in Container D, the bill is in Container E, the spork and the jackknife and "
      "the frappuccino are in Container F, the clipper and the ladybug are in Container G. Take the biscotti out of "
      "Container A. Take the folio and the encyclopedia out of Container D. Place the tetrapod inside Container A. "
      "Pick up the ladybug in Container G and place it into Container C. Take the bill out of Container E. Place the "
      "gumball inside Container D.";
  CHECK(render_description(sc, 6, lex) == expected);
  CHECK(render_statement(sc.states[6], lex) ==
        "Container A contains the tetrapod, Container B contains the icicle, Container C contains the granite and the "
        "machine and the ladybug, Container D contains the gumball, Container E contains nothing, Container F contains "
        "the spork and the jackknife and the frappuccino, Container G contains the clipper.");
  CHECK(lex.box_label(6) == "Container G");
}

TEST_CASE("cloze examples: 91 per scenario in t-major order, capped prefixes") {
  const Scenario& sc = fixtures::default_corpus().front();
  const Lexicon lex = Lexicon::base();
  const auto all = build_cloze_examples(sc, lex);
  REQUIRE(all.size() == 91);
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(all[i].t == static_cast<int>(i / 7));
    CHECK(all[i].box == static_cast<int>(i % 7));
    CHECK(all[i].gold == sc.states[i / 7].box(static_cast<int>(i % 7)));
  }
  CHECK(build_cloze_examples(sc, lex, 2).size() == 21);
  CHECK(build_demo(sc, lex).examples.size() == 14);
  CHECK(example_from_json(example_to_json(all[50])) == all[50]);
}

TEST_CASE("base and altform description templates share only the allowed function words") {
  const auto base = template_words(Templates::base());
  const auto alt = template_words(Templates::altform());
  std::set<std::string> shared;
  for (const auto& w : base) {
    if (alt.contains(w)) shared.insert(w);
  }
  CHECK(shared == allowed_shared_tokens());
}

TEST_CASE("bundled noun lists are disjoint, unique and clear of template words") {
  const auto bnc = bnc_nouns();
  const auto rare = rare_nouns();
  CHECK(bnc.size() == 100);
  CHECK(rare.size() == 100);
  std::set<std::string> a(bnc.begin(), bnc.end()), b(rare.begin(), rare.end());
  CHECK(a.size() == 100);
  CHECK(b.size() == 100);
  for (const auto& n : a) CHECK_FALSE(b.contains(n));
  auto words = template_words(Templates::base());
  for (const auto& w : template_words(Templates::altform())) words.insert(w);
  for (const auto& n : a) CHECK_FALSE(words.contains(n));
  for (const auto& n : b) CHECK_FALSE(words.contains(n));
}

TEST_CASE("noun translation maps by index and rejects unknown nouns") {
  const auto cfg = fixtures::default_config();
  const Scenario& sc = fixtures::default_corpus().front();
  const Scenario rare = translate_nouns(sc, cfg.objects, rare_nouns(), cfg);
  CHECK(rare.signature == sc.signature);
  const auto& from = cfg.objects;
  const auto to = rare_nouns();
  const auto& orig = sc.states[12].box(3);
  BoxContents expect;
  for (const auto& o : orig) expect.push_back(to[static_cast<std::size_t>(std::find(from.begin(), from.end(), o) - from.begin())]);
  CHECK(rare.states[12].box(3) == expect);
  CHECK_THROWS_AS(translate_nouns(sc, {"apple"}, {"pear"}, cfg), RenderError);
}

TEST_CASE("rendering errors and tokenization") {
  const Lexicon lex = Lexicon::base();
  CHECK_THROWS_AS(render_objects({"not-a-listed-noun"}, lex), RenderError);
  CHECK_THROWS_AS(Lexicon::by_name("klingon"), ConfigError);
  CHECK(tokenize("Flav-R-Straw, the Box 3.") == std::vector<std::string>{"flav-r-straw", "the", "box", "3"});
  CHECK(tokenize("  -- ").empty());
}

}  // TEST_SUITE
