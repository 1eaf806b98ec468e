#include "conflict/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "conflict/error.hpp"

namespace conflict {

namespace {

std::string describe_sum(double sum) {
  std::ostringstream out;
  out.precision(17);
  out << sum;
  return out.str();
}

// Neumaier summation; deep levels have up to millions of cells.
double compensated_sum(std::span<const double> values) {
  double sum = 0.0;
  double carry = 0.0;
  for (double v : values) {
    const double t = sum + v;
    carry += (std::abs(sum) >= std::abs(v)) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return sum + carry;
}

void check_masses(std::span<const double> masses, const char* what) {
  for (double m : masses) {
    if (!std::isfinite(m) || m < 0.0) {
      throw ValidationError(std::string(what) + " has a negative or non-finite entry");
    }
  }
  const double sum = compensated_sum(masses);
  if (std::abs(sum - 1.0) > kStochasticTolerance) {
    throw ValidationError(std::string(what) + " does not sum to 1 (sum " + describe_sum(sum) + ")");
  }
}

void require_same_size(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("mass vectors differ in length (" + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + ")");
  }
}

void require_compatible(const LevelMeasure& mu, const LevelMeasure& nu) {
  if (!mu.compatible(nu)) {
    throw ValidationError("measures live on different schemes or levels (" +
                          std::to_string(mu.level()) + " vs " + std::to_string(nu.level()) + ")");
  }
}

}  // namespace

StochasticVector::StochasticVector(std::vector<double> entries, double tol)
    : entries_(std::move(entries)) {
  if (entries_.empty()) {
    throw ValidationError("stochastic vector is empty");
  }
  double sum = 0.0;
  for (double p : entries_) {
    if (!std::isfinite(p) || p < 0.0) {
      throw ValidationError("stochastic vector has a negative or non-finite entry");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol) {
    throw ValidationError("stochastic vector does not sum to 1 (sum " + describe_sum(sum) + ")");
  }
}

StochasticVector StochasticVector::uniform(int n) {
  return StochasticVector(std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
}

const char* to_string(StructureKind kind) {
  switch (kind) {
    case StructureKind::SelfSimilar: return "self-similar";
    case StructureKind::Similar: return "similar";
    case StructureKind::Partial: return "partial";
  }
  return "unknown";
}

StructureMatrix::StructureMatrix(StructureKind kind, std::vector<StochasticVector> rows)
    : kind_(kind), rows_(std::move(rows)) {
  if (rows_.empty()) {
    throw ValidationError("structure matrix needs at least one row");
  }
  for (const auto& row : rows_) {
    if (row.size() != rows_.front().size()) {
      throw ValidationError("structure matrix rows differ in length");
    }
  }
  if (rows_.front().size() < 2) {
    throw ValidationError("structure matrix rows need at least two entries");
  }
}

StructureMatrix StructureMatrix::self_similar(StochasticVector row) {
  return StructureMatrix(StructureKind::SelfSimilar, {std::move(row)});
}

StructureMatrix StructureMatrix::similar(std::vector<StochasticVector> rows) {
  return StructureMatrix(StructureKind::Similar, std::move(rows));
}

StructureMatrix StructureMatrix::partial(std::vector<StochasticVector> rows) {
  return StructureMatrix(StructureKind::Partial, std::move(rows));
}

std::optional<int> StructureMatrix::defined_depth() const {
  if (kind_ == StructureKind::Partial) return static_cast<int>(rows_.size());
  return std::nullopt;
}

bool StructureMatrix::defines(int level) const {
  if (level < 0) return false;
  return kind_ != StructureKind::Partial || level <= static_cast<int>(rows_.size());
}

const StochasticVector& StructureMatrix::row(int level) const {
  if (level < 1) {
    throw ValidationError("structure rows start at level 1");
  }
  if (!defines(level)) {
    throw ValidationError("level " + std::to_string(level) +
                          " exceeds the partial structure depth k0 = " +
                          std::to_string(rows_.size()) + "; supply a continuation row");
  }
  return rows_[std::min(static_cast<std::size_t>(level), rows_.size()) - 1];
}

StructureMatrix StructureMatrix::with_continuation(StochasticVector row) const {
  if (kind_ != StructureKind::Partial) {
    throw ValidationError("only partial structure matrices take a continuation row");
  }
  std::vector<StochasticVector> rows = rows_;
  rows.push_back(std::move(row));
  return similar(std::move(rows));
}

double StructureMatrix::cell_mass(const CellAddress& address) const {
  double mass = 1.0;
  for (std::size_t l = 0; l < address.depth(); ++l) {
    const auto& r = row(static_cast<int>(l) + 1);
    const int i = address[l];
    if (i > static_cast<int>(r.size())) {
      throw ValidationError("index out of range in " + address.to_string());
    }
    mass *= r[static_cast<std::size_t>(i - 1)];
  }
  return mass;
}

LevelMeasure::LevelMeasure(PartitionScheme scheme, int level, std::vector<double> masses)
    : scheme_(std::move(scheme)), level_(level), masses_(std::move(masses)) {
  scheme_.check_level(level_);
  const std::size_t expected = cell_count(scheme_.branching(), level_);
  if (masses_.size() != expected) {
    throw ValidationError("level " + std::to_string(level_) + " needs " + std::to_string(expected) +
                          " masses, got " + std::to_string(masses_.size()));
  }
  check_masses(masses_, "level measure");
}

LevelMeasure LevelMeasure::whole(PartitionScheme scheme) {
  return LevelMeasure(std::move(scheme), 0, {1.0});
}

double LevelMeasure::mass(const CellAddress& address) const {
  if (static_cast<int>(address.depth()) > level_) {
    throw ValidationError("cell " + address.to_string() + " is finer than level " +
                          std::to_string(level_));
  }
  scheme_.check_address(address);
  const int n = scheme_.branching();
  const std::size_t span_size = cell_count(n, level_ - static_cast<int>(address.depth()));
  const std::size_t first = linear_index(address, n) * span_size;
  return std::accumulate(masses_.begin() + static_cast<std::ptrdiff_t>(first),
                         masses_.begin() + static_cast<std::ptrdiff_t>(first + span_size), 0.0);
}

double LevelMeasure::mass_of(std::span<const std::size_t> cells) const {
  double total = 0.0;
  for (std::size_t c : cells) total += masses_.at(c);
  return total;
}

bool LevelMeasure::compatible(const LevelMeasure& other) const {
  return level_ == other.level_ && scheme_ == other.scheme_;
}

LevelMeasure measure_from_matrix(const StructureMatrix& matrix, const PartitionScheme& scheme,
                                 int level) {
  if (matrix.branching() != scheme.branching()) {
    throw ValidationError("structure matrix rows have length " +
                          std::to_string(matrix.branching()) + " but the scheme is " +
                          std::to_string(scheme.branching()) + "-ary");
  }
  if (!matrix.defines(level)) {
    (void)matrix.row(level);  // throws with the partial-depth message
  }
  scheme.check_level(level);
  const int n = scheme.branching();
  const std::size_t count = cell_count(n, level);
  std::vector<double> masses(count);
  // Product along each address, accumulated left to right.
  std::vector<int> digits(static_cast<std::size_t>(level), 0);
  for (std::size_t c = 0; c < count; ++c) {
    double mass = 1.0;
    for (int l = 0; l < level; ++l) {
      mass *= matrix.row(l + 1)[static_cast<std::size_t>(digits[static_cast<std::size_t>(l)])];
    }
    masses[c] = mass;
    for (int l = level - 1; l >= 0; --l) {
      auto& d = digits[static_cast<std::size_t>(l)];
      if (++d < n) break;
      d = 0;
    }
  }
  return LevelMeasure(scheme, level, std::move(masses));
}

LevelMeasure refine(const LevelMeasure& measure, const StochasticVector& row) {
  const auto& scheme = measure.scheme();
  if (row.size() != static_cast<std::size_t>(scheme.branching())) {
    throw ValidationError("refinement row has " + std::to_string(row.size()) +
                          " entries for a " + std::to_string(scheme.branching()) + "-ary scheme");
  }
  scheme.check_level(measure.level() + 1);
  std::vector<double> masses;
  masses.reserve(measure.size() * row.size());
  for (double parent : measure.masses()) {
    for (double p : row.entries()) masses.push_back(parent * p);
  }
  return LevelMeasure(scheme, measure.level() + 1, std::move(masses));
}

double density(const LevelMeasure& measure, const CellAddress& address) {
  if (static_cast<int>(address.depth()) != measure.level()) {
    throw ValidationError("density needs a cell at the measure's level " +
                          std::to_string(measure.level()));
  }
  const double lambda = measure.scheme().cell_lambda(address);
  return measure[linear_index(address, measure.scheme().branching())] / lambda;
}

double distribution_function(const LevelMeasure& measure, double x) {
  if (!(x >= 0.0 && x <= 1.0)) {
    throw ValidationError("distribution function is defined on [0, 1]");
  }
  if (x == 1.0) return 1.0;
  const auto intervals = measure.scheme().intervals_at_level(measure.level());
  double value = 0.0;
  for (std::size_t c = 0; c < intervals.size(); ++c) {
    const auto& cell = intervals[c];
    if (x >= cell.hi) {
      value += measure[c];
    } else if (x > cell.lo) {
      value += measure[c] * (x - cell.lo) / cell.width();
    }
  }
  return std::clamp(value, 0.0, 1.0);
}

std::vector<std::pair<double, double>> sample_distribution(const LevelMeasure& measure,
                                                           int points) {
  if (points < 2) {
    throw ValidationError("need at least two sample points");
  }
  const auto intervals = measure.scheme().intervals_at_level(measure.level());
  std::vector<std::pair<double, double>> samples;
  samples.reserve(static_cast<std::size_t>(points));
  // Cells are ordered left to right, so one sweep with a running prefix suffices.
  std::size_t cell = 0;
  double below = 0.0;
  for (int i = 0; i < points; ++i) {
    const double x = (i + 1 == points) ? 1.0 : static_cast<double>(i) / (points - 1);
    while (cell < intervals.size() && intervals[cell].hi <= x) {
      below += measure[cell];
      ++cell;
    }
    double value = below;
    if (cell < intervals.size() && x > intervals[cell].lo) {
      value += measure[cell] * (x - intervals[cell].lo) / intervals[cell].width();
    }
    samples.emplace_back(x, (i + 1 == points) ? 1.0 : std::clamp(value, 0.0, 1.0));
  }
  return samples;
}

double variation_distance(std::span<const double> mu, std::span<const double> nu) {
  require_same_size(mu, nu);
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) total += std::abs(mu[i] - nu[i]);
  return 0.5 * total;
}

double variation_distance(const LevelMeasure& mu, const LevelMeasure& nu) {
  require_compatible(mu, nu);
  return variation_distance(mu.masses(), nu.masses());
}

SignedDecomposition hahn_jordan(std::span<const double> mu, std::span<const double> nu,
                                double zero_tol) {
  require_same_size(mu, nu);
  if (zero_tol < 0.0) {
    throw ValidationError("sign tolerance must be non-negative");
  }
  SignedDecomposition out;
  out.differences.resize(mu.size());
  out.signs.resize(mu.size());
  double absolute = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double d = mu[i] - nu[i];
    out.differences[i] = d;
    absolute += std::abs(d);
    if (d > zero_tol) {
      out.signs[i] = CellSign::Plus;
      out.plus.push_back(i);
    } else if (d < -zero_tol) {
      out.signs[i] = CellSign::Minus;
      out.minus.push_back(i);
    } else {
      out.signs[i] = CellSign::Zero;
      out.zero.push_back(i);
    }
  }
  out.total_difference = 0.5 * absolute;
  return out;
}

SignedDecomposition hahn_jordan(const LevelMeasure& mu, const LevelMeasure& nu, double zero_tol) {
  require_compatible(mu, nu);
  return hahn_jordan(mu.masses(), nu.masses(), zero_tol);
}

LimitMasses limit_masses(const SignedDecomposition& decomposition) {
  if (decomposition.identical()) {
    throw ValidationError("measures coincide (D = 0): the pair is already a fixed point");
  }
  // Each side is normalized by its own signed total. Both equal D up to the
  // sub-tolerance residue left on tied cells, and this keeps them exactly
  // stochastic.
  double plus_total = 0.0;
  double minus_total = 0.0;
  for (std::size_t i : decomposition.plus) plus_total += decomposition.differences[i];
  for (std::size_t i : decomposition.minus) minus_total -= decomposition.differences[i];

  LimitMasses out;
  out.mu.assign(decomposition.size(), 0.0);
  out.nu.assign(decomposition.size(), 0.0);
  for (std::size_t i : decomposition.plus) out.mu[i] = decomposition.differences[i] / plus_total;
  for (std::size_t i : decomposition.minus) out.nu[i] = -decomposition.differences[i] / minus_total;
  return out;
}

LimitMasses limit_masses(std::span<const double> mu, std::span<const double> nu, double zero_tol) {
  return limit_masses(hahn_jordan(mu, nu, zero_tol));
}

std::pair<LevelMeasure, LevelMeasure> limit_state_closed_form(const LevelMeasure& mu,
                                                              const LevelMeasure& nu,
                                                              double zero_tol) {
  auto limits = limit_masses(hahn_jordan(mu, nu, zero_tol));
  return {LevelMeasure(mu.scheme(), mu.level(), std::move(limits.mu)),
          LevelMeasure(nu.scheme(), nu.level(), std::move(limits.nu))};
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  require_same_size(a, b);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

}  // namespace conflict
