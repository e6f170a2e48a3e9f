#include "boxtrack/sampler.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "boxtrack/errors.hpp"

namespace boxtrack {

namespace {

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
  if (k > n) return 0;
  std::uint64_t r = 1;
  for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// One family of equally likely instantiations: all k-subsets of `pool`
// combined with a fixed (src, dst).
struct Slot {
  OpKind kind;
  int src = -1;
  int dst = -1;
  std::size_t k = 1;
  std::uint64_t weight = 0;
};

int max_initial_count(const WorldConfig& cfg) {
  double hi = 2.0 * cfg.e - 1.0;
  double rounded = std::round(hi);
  if (std::abs(hi - rounded) > 1e-9 || rounded < 1.0 || rounded > cfg.m) {
    throw ConfigError("initial count law uniform{1..2e-1} needs 2e-1 to be an integer in [1, m]");
  }
  return static_cast<int>(rounded);
}

}  // namespace

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("uniform_index over an empty range");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = next();
  } while (x >= limit);
  return x % n;
}

std::vector<std::size_t> Rng::choose(std::size_t n, std::size_t k) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(uniform_index(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

WorldState sample_initial(const WorldConfig& cfg, Rng& rng) {
  const int hi = max_initial_count(cfg);
  if (cfg.objects.size() < static_cast<std::size_t>(cfg.n) * static_cast<std::size_t>(cfg.m)) {
    throw ConfigError("vocabulary of " + std::to_string(cfg.objects.size()) + " objects is smaller than n*m = " +
                      std::to_string(cfg.n * cfg.m));
  }
  std::vector<std::size_t> counts(static_cast<std::size_t>(cfg.n));
  std::size_t total = 0;
  for (auto& c : counts) {
    c = 1 + static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(hi)));
    total += c;
  }
  // Partial Fisher-Yates: draw `total` objects in draw order.
  std::vector<std::size_t> pool(cfg.objects.size());
  for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = i;
  for (std::size_t i = 0; i < total; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.uniform_index(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  std::vector<BoxContents> boxes(counts.size());
  std::size_t next = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    for (std::size_t i = 0; i < counts[b]; ++i) boxes[b].push_back(cfg.objects[pool[next++]]);
  }
  return WorldState(std::move(boxes));
}

Operation sample_op(const WorldState& state, const WorldConfig& cfg, const std::unordered_set<std::string>& used,
                    Rng& rng) {
  std::vector<Object> unused;
  for (const auto& o : cfg.objects) {
    if (!used.contains(o) && !state.locate(o)) unused.push_back(o);
  }

  std::array<std::vector<Slot>, 3> slots;
  auto& puts = slots[static_cast<std::size_t>(OpKind::Put)];
  auto& removes = slots[static_cast<std::size_t>(OpKind::Remove)];
  auto& moves = slots[static_cast<std::size_t>(OpKind::Move)];
  const int n = state.num_boxes();

  for (int k = 1; k <= cfg.arity.put_max && k <= static_cast<int>(unused.size()); ++k) {
    for (int dst = 0; dst < n; ++dst) {
      if (static_cast<int>(state.box(dst).size()) + k <= cfg.m) {
        puts.push_back({OpKind::Put, -1, dst, static_cast<std::size_t>(k), binomial(unused.size(), k)});
      }
    }
  }
  for (int src = 0; src < n; ++src) {
    const auto size = state.box(src).size();
    for (std::size_t k = 1; k <= static_cast<std::size_t>(cfg.arity.remove_max) && k <= size; ++k) {
      removes.push_back({OpKind::Remove, src, -1, k, binomial(size, k)});
    }
    for (std::size_t k = 1; k <= static_cast<std::size_t>(cfg.arity.move_max) && k <= size; ++k) {
      for (int dst = 0; dst < n; ++dst) {
        if (dst != src && state.box(dst).size() + k <= static_cast<std::size_t>(cfg.m)) {
          moves.push_back({OpKind::Move, src, dst, k, binomial(size, k)});
        }
      }
    }
  }

  std::vector<std::size_t> feasible;
  for (std::size_t kind = 0; kind < slots.size(); ++kind) {
    if (!slots[kind].empty()) feasible.push_back(kind);
  }
  if (feasible.empty()) throw SamplingExhausted("no valid operation exists in the current state");

  const auto& family = slots[feasible[static_cast<std::size_t>(rng.uniform_index(feasible.size()))]];
  std::uint64_t total = 0;
  for (const auto& s : family) total += s.weight;
  std::uint64_t pick = rng.uniform_index(total);
  const Slot* slot = &family.back();
  for (const auto& s : family) {
    if (pick < s.weight) {
      slot = &s;
      break;
    }
    pick -= s.weight;
  }

  const auto& pool = slot->kind == OpKind::Put ? unused : state.box(slot->src);
  std::vector<Object> objs;
  for (auto i : rng.choose(pool.size(), slot->k)) objs.push_back(pool[i]);
  switch (slot->kind) {
    case OpKind::Put:
      return Operation::put(std::move(objs), slot->dst);
    case OpKind::Remove:
      return Operation::remove(std::move(objs), slot->src);
    case OpKind::Move:
      return Operation::move(std::move(objs), slot->src, slot->dst);
  }
  throw SamplingExhausted("unreachable operation kind");
}

Scenario sample_scenario(const WorldConfig& cfg, std::uint64_t seed, std::string id) {
  cfg.validate();
  Rng rng(seed);
  for (int attempt = 0; attempt < kScenarioRetryBudget; ++attempt) {
    WorldState initial = sample_initial(cfg, rng);
    std::unordered_set<std::string> used;
    for (const auto& b : initial.boxes()) used.insert(b.begin(), b.end());
    std::vector<Operation> ops;
    ops.reserve(static_cast<std::size_t>(cfg.num_ops));
    WorldState state = initial;
    try {
      for (int s = 0; s < cfg.num_ops; ++s) {
        Operation op = sample_op(state, cfg, used, rng);
        state = apply(state, op, cfg);
        if (op.kind() == OpKind::Put) used.insert(op.objects().begin(), op.objects().end());
        ops.push_back(std::move(op));
      }
    } catch (const SamplingExhausted&) {
      continue;
    }
    return Scenario::build(std::move(id), std::move(initial), std::move(ops), cfg);
  }
  throw SamplingExhausted("scenario '" + id + "': no complete operation sequence after " +
                          std::to_string(kScenarioRetryBudget) + " attempts");
}

std::string scenario_id(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scn-%05d", index);
  return buf;
}

std::vector<Scenario> generate_corpus(const WorldConfig& cfg, int count, std::uint64_t master_seed, unsigned threads) {
  if (count < 1) throw ConfigError("scenario count must be >= 1");
  cfg.validate();
  std::vector<Scenario> out(static_cast<std::size_t>(count));
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(count));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        out[static_cast<std::size_t>(i)] = sample_scenario(cfg, derive_seed(master_seed, i), scenario_id(i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

}  // namespace boxtrack
