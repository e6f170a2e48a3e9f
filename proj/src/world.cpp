#include "boxtrack/world.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "boxtrack/errors.hpp"

namespace boxtrack {

namespace {

bool is_noun_token(const std::string& s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
  });
}

bool contains(const BoxContents& box, std::string_view obj) {
  return std::find(box.begin(), box.end(), obj) != box.end();
}

bool has_duplicates(const std::vector<Object>& objs) {
  std::unordered_set<std::string_view> seen;
  for (const auto& o : objs) {
    if (!seen.insert(o).second) return true;
  }
  return false;
}

void check_index(int box, int n, const Operation& op) {
  if (box < 0 || box >= n) {
    throw InvalidArgument("box index " + std::to_string(box) + " out of range [0, " + std::to_string(n) +
                          ") in " + op.describe());
  }
}

int arity_limit(OpKind kind, const ArityBounds& a) {
  switch (kind) {
    case OpKind::Put:
      return a.put_max;
    case OpKind::Remove:
      return a.remove_max;
    case OpKind::Move:
      return a.move_max;
  }
  return 0;
}

// Box that makes `op` invalid, for error reporting.
int offending_box(const WorldState& state, const Operation& op, const WorldConfig& cfg) {
  switch (op.kind()) {
    case OpKind::Put:
      for (const auto& o : op.objects()) {
        if (auto where = state.locate(o)) return *where;
      }
      return *op.dst();
    case OpKind::Remove:
      return *op.src();
    case OpKind::Move: {
      const auto& src = state.box(*op.src());
      for (const auto& o : op.objects()) {
        if (!contains(src, o)) return *op.src();
      }
      (void)cfg;
      return *op.dst();
    }
  }
  return -1;
}

}  // namespace

bool same_contents(const BoxContents& a, const BoxContents& b) {
  if (a.size() != b.size()) return false;
  BoxContents x = a, y = b;
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  return x == y;
}

void WorldConfig::validate() const {
  if (n < 1) throw ConfigError("n must be >= 1");
  if (n > 26) throw ConfigError("n must be <= 26 (box labels and signature digits)");
  if (m < 1) throw ConfigError("m must be >= 1");
  if (m > 9) throw ConfigError("m must be <= 9 (one signature digit per box)");
  if (!(e >= 1.0 && e <= static_cast<double>(m))) throw ConfigError("e must satisfy 1 <= e <= m");
  if (num_ops < 0) throw ConfigError("num_ops must be >= 0");
  for (int a : {arity.put_max, arity.move_max, arity.remove_max}) {
    if (a < 1 || a > m) throw ConfigError("operation arity bounds must lie in [1, m]");
  }
  std::unordered_set<std::string_view> seen;
  for (const auto& o : objects) {
    if (!is_noun_token(o)) throw ConfigError("object noun '" + o + "' is not a non-empty lowercase token");
    if (!seen.insert(o).second) throw ConfigError("duplicate object noun '" + o + "'");
  }
}

const BoxContents& WorldState::box(int i) const {
  if (i < 0 || i >= num_boxes()) {
    throw InvalidArgument("box index " + std::to_string(i) + " out of range [0, " + std::to_string(num_boxes()) + ")");
  }
  return boxes_[static_cast<std::size_t>(i)];
}

std::optional<int> WorldState::locate(std::string_view object) const {
  for (int i = 0; i < num_boxes(); ++i) {
    if (contains(boxes_[static_cast<std::size_t>(i)], object)) return i;
  }
  return std::nullopt;
}

std::size_t WorldState::total_objects() const noexcept {
  std::size_t total = 0;
  for (const auto& b : boxes_) total += b.size();
  return total;
}

void WorldState::check_invariants(int capacity) const {
  std::unordered_set<std::string_view> seen;
  for (int i = 0; i < num_boxes(); ++i) {
    const auto& b = boxes_[static_cast<std::size_t>(i)];
    if (static_cast<int>(b.size()) > capacity) {
      throw InvalidArgument("box " + std::to_string(i) + " holds " + std::to_string(b.size()) +
                            " objects, capacity is " + std::to_string(capacity));
    }
    for (const auto& o : b) {
      if (!seen.insert(o).second) throw InvalidArgument("object '" + o + "' occurs in more than one box");
    }
  }
}

std::string_view to_string(OpKind kind) noexcept {
  switch (kind) {
    case OpKind::Put:
      return "put";
    case OpKind::Remove:
      return "remove";
    case OpKind::Move:
      return "move";
  }
  return "?";
}

OpKind op_kind_from_string(std::string_view text) {
  if (text == "put") return OpKind::Put;
  if (text == "remove") return OpKind::Remove;
  if (text == "move") return OpKind::Move;
  throw InvalidArgument("unknown operation kind '" + std::string(text) + "'");
}

Operation::Operation(OpKind kind, std::vector<Object> objs, std::optional<int> src, std::optional<int> dst)
    : kind_(kind), objs_(std::move(objs)), src_(src), dst_(dst) {
  if (objs_.empty()) throw InvalidArgument("operation must carry at least one object");
}

Operation Operation::put(std::vector<Object> objs, int dst) {
  return Operation(OpKind::Put, std::move(objs), std::nullopt, dst);
}

Operation Operation::remove(std::vector<Object> objs, int src) {
  return Operation(OpKind::Remove, std::move(objs), src, std::nullopt);
}

Operation Operation::move(std::vector<Object> objs, int src, int dst) {
  if (src == dst) throw InvalidArgument("move source and destination must differ (box " + std::to_string(src) + ")");
  return Operation(OpKind::Move, std::move(objs), src, dst);
}

std::string Operation::describe() const {
  std::string out(to_string(kind_));
  out += '[';
  for (std::size_t i = 0; i < objs_.size(); ++i) {
    if (i) out += ',';
    out += objs_[i];
  }
  out += ']';
  if (src_) out += ' ' + std::to_string(*src_);
  if (src_ && dst_) out += "->" + std::to_string(*dst_);
  else if (dst_) out += " ->" + std::to_string(*dst_);
  return out;
}

bool is_valid(const WorldState& state, const Operation& op, const WorldConfig& cfg) {
  const int n = state.num_boxes();
  if (op.src()) check_index(*op.src(), n, op);
  if (op.dst()) check_index(*op.dst(), n, op);

  const auto& objs = op.objects();
  if (static_cast<int>(objs.size()) > arity_limit(op.kind(), cfg.arity)) return false;
  if (has_duplicates(objs)) return false;

  auto fits = [&](int dst) { return static_cast<int>(state.box(dst).size() + objs.size()) <= cfg.m; };
  auto all_in = [&](int src) {
    const auto& b = state.box(src);
    return std::all_of(objs.begin(), objs.end(), [&](const Object& o) { return contains(b, o); });
  };

  switch (op.kind()) {
    case OpKind::Put:
      return std::none_of(objs.begin(), objs.end(), [&](const Object& o) { return state.locate(o).has_value(); }) &&
             fits(*op.dst());
    case OpKind::Remove:
      return all_in(*op.src());
    case OpKind::Move:
      return all_in(*op.src()) && fits(*op.dst());
  }
  return false;
}

WorldState apply(const WorldState& state, const Operation& op, const WorldConfig& cfg) {
  if (!is_valid(state, op, cfg)) {
    int box = offending_box(state, op, cfg);
    throw PreconditionViolation("invalid operation " + op.describe() + " (offending box " + std::to_string(box) + ")",
                                op.describe(), box);
  }
  std::vector<BoxContents> boxes = state.boxes();
  auto erase_from = [&](int src) {
    auto& b = boxes[static_cast<std::size_t>(src)];
    for (const auto& o : op.objects()) b.erase(std::find(b.begin(), b.end(), o));
  };
  auto add_to = [&](int dst) {
    auto& b = boxes[static_cast<std::size_t>(dst)];
    b.insert(b.end(), op.objects().begin(), op.objects().end());
  };
  switch (op.kind()) {
    case OpKind::Put:
      add_to(*op.dst());
      break;
    case OpKind::Remove:
      erase_from(*op.src());
      break;
    case OpKind::Move:
      erase_from(*op.src());
      add_to(*op.dst());
      break;
  }
  return WorldState(std::move(boxes));
}

WorldState replay(const WorldState& initial, const std::vector<Operation>& ops, int t, const WorldConfig& cfg) {
  if (t < 0 || t > static_cast<int>(ops.size())) {
    throw InvalidArgument("prefix length " + std::to_string(t) + " outside [0, " + std::to_string(ops.size()) + "]");
  }
  WorldState state = initial;
  for (int s = 0; s < t; ++s) {
    try {
      state = apply(state, ops[static_cast<std::size_t>(s)], cfg);
    } catch (const PreconditionViolation& err) {
      throw PreconditionViolation("step " + std::to_string(s) + ": " + err.what(), err.op(), err.box(), s);
    }
  }
  return state;
}

std::string signature(const WorldState& state) {
  std::string sig;
  sig.reserve(static_cast<std::size_t>(state.num_boxes()));
  for (const auto& b : state.boxes()) {
    if (b.size() > 9) throw InvalidArgument("signature needs per-box counts <= 9");
    sig += static_cast<char>('0' + b.size());
  }
  return sig;
}

Scenario Scenario::build(std::string id, WorldState initial, std::vector<Operation> ops, const WorldConfig& cfg) {
  if (initial.num_boxes() != cfg.n) {
    throw InvalidArgument("scenario '" + id + "' has " + std::to_string(initial.num_boxes()) + " boxes, expected " +
                          std::to_string(cfg.n));
  }
  initial.check_invariants(cfg.m);
  Scenario sc;
  sc.id = std::move(id);
  sc.signature = boxtrack::signature(initial);
  sc.states.reserve(ops.size() + 1);
  sc.states.push_back(initial);
  for (std::size_t s = 0; s < ops.size(); ++s) {
    try {
      sc.states.push_back(apply(sc.states.back(), ops[s], cfg));
    } catch (const PreconditionViolation& err) {
      throw PreconditionViolation("scenario '" + sc.id + "' step " + std::to_string(s) + ": " + err.what(), err.op(),
                                  err.box(), static_cast<int>(s));
    }
  }
  sc.initial = std::move(initial);
  sc.ops = std::move(ops);
  return sc;
}

int ops_affecting_box(const Scenario& scenario, int t, int box) {
  int count = 0;
  for (int s = 0; s < t; ++s) {
    const auto& before = scenario.states.at(static_cast<std::size_t>(s)).box(box);
    const auto& after = scenario.states.at(static_cast<std::size_t>(s + 1)).box(box);
    if (!same_contents(before, after)) ++count;
  }
  return count;
}

bool changed_from_initial(const Scenario& scenario, int t, int box) {
  return !same_contents(scenario.states.at(static_cast<std::size_t>(t)).box(box), scenario.states.front().box(box));
}

}  // namespace boxtrack
