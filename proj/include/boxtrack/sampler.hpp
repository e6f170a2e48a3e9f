#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "boxtrack/world.hpp"

namespace boxtrack {

/// Seeded generator with a platform-independent uniform draw. The standard
/// distributions are implementation-defined, so they are avoided here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, n). n must be > 0.
  std::uint64_t uniform_index(std::uint64_t n);

  /// Uniform double in [0, 1).
  double uniform_real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[static_cast<std::size_t>(uniform_index(i))]);
    }
  }

  /// k distinct indices from [0, n), returned in ascending order.
  std::vector<std::size_t> choose(std::size_t n, std::size_t k);

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 over (master, index); per-scenario seeds are independent of
/// generation order.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Per-box counts uniform over {1, ..., 2e - 1}; objects without replacement.
WorldState sample_initial(const WorldConfig& cfg, Rng& rng);

/// Picks a kind uniformly among kinds with a valid instantiation, then a valid
/// instantiation uniformly. `used` holds every object that has appeared in the
/// scenario so far; Put draws only outside it. Throws SamplingExhausted.
Operation sample_op(const WorldState& state, const WorldConfig& cfg, const std::unordered_set<std::string>& used,
                    Rng& rng);

inline constexpr int kScenarioRetryBudget = 100;

Scenario sample_scenario(const WorldConfig& cfg, std::uint64_t seed, std::string id = "scenario");

/// "scn-00042"
std::string scenario_id(int index);

/// Deterministic in (cfg, count, master_seed) regardless of `threads`.
std::vector<Scenario> generate_corpus(const WorldConfig& cfg, int count, std::uint64_t master_seed,
                                      unsigned threads = 0);

}  // namespace boxtrack
