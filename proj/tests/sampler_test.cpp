#include "boxtrack/sampler.hpp"

#include <set>
#include <unordered_set>

#include "boxtrack/errors.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace boxtrack;

TEST_SUITE("sampler") {

TEST_CASE("scenarios are a pure function of the seed") {
  const WorldConfig cfg = fixtures::default_config();
  CHECK(scenario_to_json(sample_scenario(cfg, 42, "x")).dump() == scenario_to_json(sample_scenario(cfg, 42, "x")).dump());
  CHECK(scenario_to_json(sample_scenario(cfg, 42, "x")).dump() != scenario_to_json(sample_scenario(cfg, 43, "x")).dump());
}

TEST_CASE("corpus output does not depend on the thread count") {
  const WorldConfig cfg = fixtures::default_config();
  const auto one = generate_corpus(cfg, 64, 9, 1);
  const auto four = generate_corpus(cfg, 64, 9, 4);
  REQUIRE(one.size() == 64);
  for (std::size_t i = 0; i < one.size(); ++i) {
    CHECK(scenario_to_json(one[i]).dump() == scenario_to_json(four[i]).dump());
  }
  CHECK(one[42].id == "scn-00042");
  CHECK(scenario_id(7) == "scn-00007");
  CHECK_THROWS_AS(generate_corpus(cfg, 0, 9), ConfigError);
}

TEST_CASE("every default scenario respects the generation contract") {
  const WorldConfig cfg = fixtures::default_config();
  const auto& corpus = fixtures::default_corpus();
  REQUIRE(corpus.size() == 2200);
  std::set<std::string> ids;
  std::set<OpKind> kinds;
  int max_final_ops = 0;
  for (const auto& sc : corpus) {
    ids.insert(sc.id);
    REQUIRE(sc.num_ops() == 12);
    for (const auto& b : sc.initial.boxes()) {
      CHECK(b.size() >= 1);
      CHECK(b.size() <= 3);
    }
    std::unordered_set<std::string> used;
    for (const auto& b : sc.initial.boxes()) used.insert(b.begin(), b.end());
    for (const auto& op : sc.ops) {
      kinds.insert(op.kind());
      switch (op.kind()) {
        case OpKind::Put:
          CHECK(op.objects().size() == 1);
          for (const auto& o : op.objects()) CHECK(used.insert(o).second);  // never seen before
          break;
        case OpKind::Move:
          CHECK(op.objects().size() == 1);
          break;
        case OpKind::Remove:
          CHECK(op.objects().size() >= 1);
          CHECK(op.objects().size() <= 2);
          break;
      }
    }
    for (int b = 0; b < sc.num_boxes(); ++b) max_final_ops = std::max(max_final_ops, ops_affecting_box(sc, 12, b));
  }
  CHECK(ids.size() == 2200);
  CHECK(kinds.size() == 3);
  CHECK(max_final_ops >= 7);
}

TEST_CASE("initial counts cover one to three objects and average about e") {
  const WorldConfig cfg = fixtures::default_config();
  Rng rng(5);
  std::map<std::size_t, int> hist;
  double total = 0;
  const int draws = 4000;
  for (int i = 0; i < draws; ++i) {
    const auto s = sample_initial(cfg, rng);
    for (const auto& b : s.boxes()) {
      ++hist[b.size()];
      total += static_cast<double>(b.size());
    }
    CHECK_NOTHROW(s.check_invariants(cfg.m));
  }
  CHECK(hist.size() == 3);
  CHECK(total / (draws * cfg.n) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("sampling errors") {
  WorldConfig cfg = fixtures::default_config();
  cfg.objects.resize(20);  // fewer than n * m
  Rng rng(1);
  CHECK_THROWS_AS(sample_initial(cfg, rng), ConfigError);

  WorldConfig tiny;
  tiny.objects = {"apple", "bell"};
  tiny.n = 2;
  tiny.m = 1;
  tiny.e = 1;
  const std::unordered_set<std::string> used{"apple", "bell"};
  CHECK_THROWS_AS(sample_op(WorldState::empty(2), tiny, used, rng), SamplingExhausted);
}

TEST_CASE("rng draws are uniform and seeds derive independently") {
  Rng rng(123);
  std::array<int, 6> counts{};
  for (int i = 0; i < 60000; ++i) ++counts[rng.uniform_index(6)];
  for (int c : counts) CHECK(c == doctest::Approx(10000).epsilon(0.05));

  const auto picked = rng.choose(10, 4);
  CHECK(picked.size() == 4);
  CHECK(std::is_sorted(picked.begin(), picked.end()));
  CHECK(std::set<std::size_t>(picked.begin(), picked.end()).size() == 4);
  CHECK(rng.choose(3, 0).empty());

  std::set<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < 1000; ++i) seeds.insert(derive_seed(7, i));
  CHECK(seeds.size() == 1000);
  CHECK(derive_seed(7, 1) != derive_seed(8, 1));
}

}  // TEST_SUITE
