#pragma once

// Box-world states and the operations that change them. Everything here is a
// pure value computation; the rest of the toolkit treats it as ground truth.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace boxtrack {

using Object = std::string;
/// Contents of one box in insertion order. Comparisons that matter for the
/// task treat it as a set (see `same_contents`).
using BoxContents = std::vector<Object>;

bool same_contents(const BoxContents& a, const BoxContents& b);

struct ArityBounds {
  int put_max = 1;
  int move_max = 1;
  int remove_max = 2;
};

struct WorldConfig {
  std::vector<std::string> objects;
  int n = 7;
  int m = 3;
  double e = 2.0;
  int num_ops = 12;
  ArityBounds arity;

  /// Throws ConfigError describing the first violated invariant.
  void validate() const;
};

class WorldState {
 public:
  WorldState() = default;
  explicit WorldState(std::vector<BoxContents> boxes) : boxes_(std::move(boxes)) {}

  static WorldState empty(int n) { return WorldState(std::vector<BoxContents>(static_cast<std::size_t>(n))); }

  int num_boxes() const noexcept { return static_cast<int>(boxes_.size()); }
  const std::vector<BoxContents>& boxes() const noexcept { return boxes_; }
  /// Throws InvalidArgument for an out-of-range index.
  const BoxContents& box(int i) const;

  std::optional<int> locate(std::string_view object) const;
  std::size_t total_objects() const noexcept;

  /// Capacity and global uniqueness. Throws InvalidArgument on violation.
  void check_invariants(int capacity) const;

  friend bool operator==(const WorldState&, const WorldState&) = default;

 private:
  std::vector<BoxContents> boxes_;
};

enum class OpKind { Put, Remove, Move };

std::string_view to_string(OpKind kind) noexcept;
/// Accepts "put", "remove", "move". Throws InvalidArgument otherwise.
OpKind op_kind_from_string(std::string_view text);

class Operation {
 public:
  static Operation put(std::vector<Object> objs, int dst);
  static Operation remove(std::vector<Object> objs, int src);
  /// Throws InvalidArgument when src == dst.
  static Operation move(std::vector<Object> objs, int src, int dst);

  OpKind kind() const noexcept { return kind_; }
  const std::vector<Object>& objects() const noexcept { return objs_; }
  std::optional<int> src() const noexcept { return src_; }
  std::optional<int> dst() const noexcept { return dst_; }

  /// True when the operation reads or writes `box`.
  bool touches(int box) const noexcept { return src_ == box || dst_ == box; }

  /// Compact debugging form, e.g. "move[glass] 6->4".
  std::string describe() const;

  friend bool operator==(const Operation&, const Operation&) = default;

 private:
  Operation(OpKind kind, std::vector<Object> objs, std::optional<int> src, std::optional<int> dst);

  OpKind kind_;
  std::vector<Object> objs_;
  std::optional<int> src_;
  std::optional<int> dst_;
};

/// Throws InvalidArgument if a box index is outside [0, n).
bool is_valid(const WorldState& state, const Operation& op, const WorldConfig& cfg);

/// Returns the successor state. Throws PreconditionViolation if `op` is not valid.
WorldState apply(const WorldState& state, const Operation& op, const WorldConfig& cfg);

/// Folds `apply` over ops[0, t). Errors carry the failing step index.
WorldState replay(const WorldState& initial, const std::vector<Operation>& ops, int t, const WorldConfig& cfg);

/// One digit per box: its object count.
std::string signature(const WorldState& state);

struct Scenario {
  std::string id;
  WorldState initial;
  std::vector<Operation> ops;
  /// states[0] = initial, states[t + 1] = apply(states[t], ops[t]).
  std::vector<WorldState> states;
  std::string signature;

  /// Derives states and signature, validating every step.
  static Scenario build(std::string id, WorldState initial, std::vector<Operation> ops, const WorldConfig& cfg);

  int num_ops() const noexcept { return static_cast<int>(ops.size()); }
  int num_boxes() const noexcept { return initial.num_boxes(); }
};

/// Number of steps s < t that changed the contents of `box`.
int ops_affecting_box(const Scenario& scenario, int t, int box);

bool changed_from_initial(const Scenario& scenario, int t, int box);

}  // namespace boxtrack
