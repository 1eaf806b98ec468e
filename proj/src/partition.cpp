#include "conflict/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "conflict/error.hpp"

namespace conflict {

CellAddress::CellAddress(std::vector<int> indices) : indices_(std::move(indices)) {
  for (int i : indices_) {
    if (i < 1) {
      throw ValidationError("cell indices are 1-based; got " + std::to_string(i));
    }
  }
}

CellAddress::CellAddress(std::initializer_list<int> indices)
    : CellAddress(std::vector<int>(indices)) {}

CellAddress CellAddress::child(int index) const {
  std::vector<int> next = indices_;
  next.push_back(index);
  return CellAddress(std::move(next));
}

CellAddress CellAddress::prefix(std::size_t length) const {
  if (length > indices_.size()) {
    throw ValidationError("prefix longer than address " + to_string());
  }
  return CellAddress(std::vector<int>(indices_.begin(), indices_.begin() + length));
}

bool CellAddress::is_prefix_of(const CellAddress& other) const {
  if (depth() > other.depth()) return false;
  return std::equal(indices_.begin(), indices_.end(), other.indices_.begin());
}

std::string CellAddress::to_string() const {
  std::string out = "(";
  for (std::size_t l = 0; l < indices_.size(); ++l) {
    if (l > 0) out += ',';
    out += std::to_string(indices_[l]);
  }
  return out + ")";
}

std::size_t linear_index(const CellAddress& address, int n) {
  std::size_t index = 0;
  for (int i : address.indices()) {
    if (i > n) {
      throw ValidationError("index " + std::to_string(i) + " out of range [1, " +
                            std::to_string(n) + "] in " + address.to_string());
    }
    index = index * static_cast<std::size_t>(n) + static_cast<std::size_t>(i - 1);
  }
  return index;
}

CellAddress address_at(std::size_t index, int n, int level) {
  std::vector<int> indices(static_cast<std::size_t>(level));
  for (int l = level - 1; l >= 0; --l) {
    indices[static_cast<std::size_t>(l)] = static_cast<int>(index % static_cast<std::size_t>(n)) + 1;
    index /= static_cast<std::size_t>(n);
  }
  if (index != 0) {
    throw ValidationError("linear index out of range for level " + std::to_string(level));
  }
  return CellAddress(std::move(indices));
}

std::size_t cell_count(int n, int level) {
  std::size_t count = 1;
  for (int l = 0; l < level; ++l) {
    if (count > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(n)) {
      throw ValidationError("level " + std::to_string(level) + " has too many cells");
    }
    count *= static_cast<std::size_t>(n);
  }
  return count;
}

namespace {

void validate_ratio_row(std::span<const double> row, int n, std::size_t level) {
  std::ostringstream where;
  where << "ratio row for level " << level;
  if (row.size() != static_cast<std::size_t>(n)) {
    throw ValidationError(where.str() + " has " + std::to_string(row.size()) +
                          " entries, expected " + std::to_string(n));
  }
  double sum = 0.0;
  for (double q : row) {
    if (!std::isfinite(q) || q <= 0.0) {
      throw ValidationError(where.str() + " has a non-positive entry");
    }
    sum += q;
  }
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << where.str() << " is not stochastic (sum " << sum << ")";
    throw ValidationError(msg.str());
  }
}

}  // namespace

PartitionScheme::PartitionScheme(int n, std::vector<std::vector<double>> ratio_rows,
                                 bool repeat_last)
    : n_(n), rows_(std::move(ratio_rows)), repeat_last_(repeat_last) {
  if (n_ < 2) {
    throw ValidationError("branching factor must be at least 2, got " + std::to_string(n_));
  }
  if (rows_.empty()) {
    throw ValidationError("a partition scheme needs at least one ratio row");
  }
  for (std::size_t l = 0; l < rows_.size(); ++l) {
    validate_ratio_row(rows_[l], n_, l + 1);
  }
}

PartitionScheme PartitionScheme::uniform(int n) {
  if (n < 2) {
    throw ValidationError("branching factor must be at least 2, got " + std::to_string(n));
  }
  return PartitionScheme(n, {std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)}, true);
}

std::optional<int> PartitionScheme::max_level() const {
  if (repeat_last_) return std::nullopt;
  return static_cast<int>(rows_.size());
}

bool PartitionScheme::reaches(int level) const {
  if (level < 0) return false;
  return repeat_last_ || level <= static_cast<int>(rows_.size());
}

void PartitionScheme::check_level(int level) const {
  if (!reaches(level)) {
    throw ValidationError("level " + std::to_string(level) +
                          " is beyond the partition scheme (deepest level " +
                          std::to_string(rows_.size()) + ")");
  }
}

std::span<const double> PartitionScheme::ratio_row(int level) const {
  if (level < 1) {
    throw ValidationError("ratio rows start at level 1");
  }
  check_level(level);
  const auto row = std::min(static_cast<std::size_t>(level), rows_.size()) - 1;
  return rows_[row];
}

bool PartitionScheme::is_uniform(double tol) const {
  for (const auto& row : rows_) {
    for (double q : row) {
      if (std::abs(q - 1.0 / n_) > tol) return false;
    }
  }
  return true;
}

void PartitionScheme::check_address(const CellAddress& address) const {
  check_level(static_cast<int>(address.depth()));
  for (int i : address.indices()) {
    if (i > n_) {
      throw ValidationError("index " + std::to_string(i) + " out of range [1, " +
                            std::to_string(n_) + "] in " + address.to_string());
    }
  }
}

double PartitionScheme::cell_lambda(const CellAddress& address) const {
  check_address(address);
  double lambda = 1.0;
  for (std::size_t l = 0; l < address.depth(); ++l) {
    lambda *= ratio_row(static_cast<int>(l) + 1)[static_cast<std::size_t>(address[l] - 1)];
  }
  return lambda;
}

std::vector<CellAddress> PartitionScheme::cells_at_level(int level) const {
  check_level(level);
  const std::size_t count = cell_count(n_, level);
  std::vector<CellAddress> cells;
  cells.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    cells.push_back(address_at(i, n_, level));
  }
  return cells;
}

std::vector<double> PartitionScheme::lambdas_at_level(int level) const {
  check_level(level);
  std::vector<double> lambdas{1.0};
  for (int l = 1; l <= level; ++l) {
    const auto row = ratio_row(l);
    std::vector<double> next;
    next.reserve(lambdas.size() * row.size());
    for (double parent : lambdas) {
      for (double q : row) next.push_back(parent * q);
    }
    lambdas = std::move(next);
  }
  return lambdas;
}

namespace {

// Splits [lo, hi) into the n children given by `row`.
void split_interval(const Interval& parent, std::span<const double> row, std::vector<Interval>& out) {
  const double width = parent.hi - parent.lo;
  double cumulative = 0.0;
  double lo = parent.lo;
  for (std::size_t i = 0; i < row.size(); ++i) {
    cumulative += row[i];
    const double hi = (i + 1 == row.size()) ? parent.hi : parent.lo + width * cumulative;
    out.push_back({lo, hi});
    lo = hi;
  }
}

}  // namespace

Interval PartitionScheme::interval_of_cell(const CellAddress& address) const {
  check_address(address);
  Interval current{0.0, 1.0};
  std::vector<Interval> children;
  for (std::size_t l = 0; l < address.depth(); ++l) {
    children.clear();
    split_interval(current, ratio_row(static_cast<int>(l) + 1), children);
    current = children[static_cast<std::size_t>(address[l] - 1)];
  }
  return current;
}

std::vector<Interval> PartitionScheme::intervals_at_level(int level) const {
  check_level(level);
  std::vector<Interval> intervals{{0.0, 1.0}};
  for (int l = 1; l <= level; ++l) {
    std::vector<Interval> next;
    next.reserve(intervals.size() * static_cast<std::size_t>(n_));
    for (const auto& parent : intervals) split_interval(parent, ratio_row(l), next);
    intervals = std::move(next);
  }
  return intervals;
}

}  // namespace conflict
