#pragma once

// Similar and self-similar structure measures on a partition scheme, their
// piecewise-uniform level realizations, and the signed-difference machinery
// (Hahn-Jordan split, variation distance, closed-form conflict limit).

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "conflict/partition.hpp"

namespace conflict {

/// Cells whose mass difference is within this bound count as ties.
inline constexpr double kSignTolerance = 1e-12;

class StochasticVector {
 public:
  explicit StochasticVector(std::vector<double> entries, double tol = kStochasticTolerance);
  static StochasticVector uniform(int n);

  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const { return entries_; }

  friend bool operator==(const StochasticVector&, const StochasticVector&) = default;

 private:
  std::vector<double> entries_;
};

enum class StructureKind {
  SelfSimilar,  // one row used at every level
  Similar,      // one row per level; the last row repeats beyond the list
  Partial,      // rows for levels 1..k0 only
};

const char* to_string(StructureKind kind);

/// Rows of conditional masses, one stochastic vector per level.
class StructureMatrix {
 public:
  static StructureMatrix self_similar(StochasticVector row);
  static StructureMatrix similar(std::vector<StochasticVector> rows);
  static StructureMatrix partial(std::vector<StochasticVector> rows);

  StructureKind kind() const { return kind_; }
  int branching() const { return static_cast<int>(rows_.front().size()); }
  const std::vector<StochasticVector>& rows() const { return rows_; }

  /// k0 for partial matrices, nullopt otherwise.
  std::optional<int> defined_depth() const;
  bool defines(int level) const;
  const StochasticVector& row(int level) const;

  /// Appends an explicit row for level k0+1, turning a partial matrix into a
  /// similar one.
  StructureMatrix with_continuation(StochasticVector row) const;

  /// Product of the conditional masses along the address.
  double cell_mass(const CellAddress& address) const;

  friend bool operator==(const StructureMatrix&, const StructureMatrix&) = default;

 private:
  StructureMatrix(StructureKind kind, std::vector<StochasticVector> rows);

  StructureKind kind_;
  std::vector<StochasticVector> rows_;
};

/// Piecewise-uniform probability measure at depth k: one mass per level-k cell
/// in lexicographic order, uniformly spread inside its cell.
class LevelMeasure {
 public:
  LevelMeasure(PartitionScheme scheme, int level, std::vector<double> masses);

  /// The level-0 measure: all mass on the whole interval.
  static LevelMeasure whole(PartitionScheme scheme);

  const PartitionScheme& scheme() const { return scheme_; }
  int level() const { return level_; }
  std::size_t size() const { return masses_.size(); }
  std::span<const double> masses() const { return masses_; }
  double operator[](std::size_t i) const { return masses_[i]; }

  /// Mass of a cell at this level or any coarser one.
  double mass(const CellAddress& address) const;
  double mass_of(std::span<const std::size_t> cells) const;

  /// True when both measures live on the same scheme and level.
  bool compatible(const LevelMeasure& other) const;

  friend bool operator==(const LevelMeasure&, const LevelMeasure&) = default;

 private:
  PartitionScheme scheme_;
  int level_;
  std::vector<double> masses_;
};

LevelMeasure measure_from_matrix(const StructureMatrix& matrix, const PartitionScheme& scheme,
                                 int level);

/// Splits each cell's mass among its children in `row` proportions.
LevelMeasure refine(const LevelMeasure& measure, const StochasticVector& row);

/// Radon-Nikodym density of the measure inside the cell.
double density(const LevelMeasure& measure, const CellAddress& address);

/// F(x) = m([0, x)) for the interval realization of the scheme.
double distribution_function(const LevelMeasure& measure, double x);

/// F sampled at `points` equispaced abscissae covering [0, 1].
std::vector<std::pair<double, double>> sample_distribution(const LevelMeasure& measure,
                                                           int points);

double variation_distance(std::span<const double> mu, std::span<const double> nu);
double variation_distance(const LevelMeasure& mu, const LevelMeasure& nu);

enum class CellSign : std::int8_t { Plus, Minus, Zero };

/// Sign split of d = mu - nu over a finite family of cells.
struct SignedDecomposition {
  std::vector<double> differences;
  std::vector<CellSign> signs;
  std::vector<std::size_t> plus;
  std::vector<std::size_t> minus;
  std::vector<std::size_t> zero;
  /// D = 1/2 sum |d|
  double total_difference = 0.0;

  std::size_t size() const { return signs.size(); }
  bool identical() const { return plus.empty() && minus.empty(); }
};

SignedDecomposition hahn_jordan(std::span<const double> mu, std::span<const double> nu,
                                double zero_tol = kSignTolerance);
SignedDecomposition hahn_jordan(const LevelMeasure& mu, const LevelMeasure& nu,
                                double zero_tol = kSignTolerance);

struct LimitMasses {
  std::vector<double> mu;
  std::vector<double> nu;
};

/// Closed-form conflict limit: normalized positive part of mu - nu for mu,
/// normalized negative part for nu. Throws when the measures coincide.
LimitMasses limit_masses(std::span<const double> mu, std::span<const double> nu,
                         double zero_tol = kSignTolerance);
LimitMasses limit_masses(const SignedDecomposition& decomposition);

std::pair<LevelMeasure, LevelMeasure> limit_state_closed_form(const LevelMeasure& mu,
                                                              const LevelMeasure& nu,
                                                              double zero_tol = kSignTolerance);

double sup_distance(std::span<const double> a, std::span<const double> b);

}  // namespace conflict
