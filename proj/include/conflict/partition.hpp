#pragma once

// Consecutive n-ary division of the unit interval. Level k has n^k cells,
// addressed by index sequences (i_1, ..., i_k) with 1-based indices, and each
// child's share of its parent's length is fixed by the ratio row of its level.

#include <compare>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace conflict {

/// Tolerance for row sums and total masses.
inline constexpr double kStochasticTolerance = 1e-12;

class CellAddress {
 public:
  CellAddress() = default;
  explicit CellAddress(std::vector<int> indices);
  CellAddress(std::initializer_list<int> indices);

  std::size_t depth() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  int operator[](std::size_t level) const { return indices_[level]; }
  std::span<const int> indices() const { return indices_; }

  CellAddress child(int index) const;
  CellAddress prefix(std::size_t length) const;
  bool is_prefix_of(const CellAddress& other) const;

  /// "(1,2,3)"; the root prints as "()".
  std::string to_string() const;

  friend bool operator==(const CellAddress&, const CellAddress&) = default;
  friend auto operator<=>(const CellAddress&, const CellAddress&) = default;

 private:
  std::vector<int> indices_;
};

/// Position of `address` in the lexicographic enumeration of its level.
std::size_t linear_index(const CellAddress& address, int n);
CellAddress address_at(std::size_t index, int n, int level);
std::size_t cell_count(int n, int level);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  bool contains(double x) const { return lo <= x && x < hi; }
};

class PartitionScheme {
 public:
  /// Rows are indexed by level starting at 1. Levels past the last row reuse
  /// it when `repeat_last` is set and are unreachable otherwise.
  PartitionScheme(int n, std::vector<std::vector<double>> ratio_rows, bool repeat_last);

  static PartitionScheme uniform(int n);

  int branching() const { return n_; }
  bool repeats_last() const { return repeat_last_; }
  const std::vector<std::vector<double>>& ratio_rows() const { return rows_; }

  /// Deepest reachable level, or nullopt when rows repeat forever.
  std::optional<int> max_level() const;
  bool reaches(int level) const;
  std::span<const double> ratio_row(int level) const;

  /// True when every reachable row is 1/n throughout.
  bool is_uniform(double tol = kStochasticTolerance) const;

  void check_level(int level) const;
  void check_address(const CellAddress& address) const;

  /// Lebesgue measure of the cell: the product of the ratios along the path.
  double cell_lambda(const CellAddress& address) const;
  std::vector<CellAddress> cells_at_level(int level) const;
  std::vector<double> lambdas_at_level(int level) const;

  /// Left-to-right nested realization; siblings split the parent interval in
  /// ratio-row proportion and the last sibling closes at the parent's right end.
  Interval interval_of_cell(const CellAddress& address) const;
  std::vector<Interval> intervals_at_level(int level) const;

  friend bool operator==(const PartitionScheme&, const PartitionScheme&) = default;

 private:
  int n_;
  std::vector<std::vector<double>> rows_;
  bool repeat_last_;
};

}  // namespace conflict
