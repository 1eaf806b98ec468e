#pragma once

// Controlled redistribution: one opponent moves its own mass inside a cell
// between approximation steps, and the consequences for the conflict limit.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "conflict/inequality.hpp"
#include "conflict/measures.hpp"

namespace conflict {

/// New masses for every measure-level cell inside the target, left to right.
struct CellMassReplacement {
  std::vector<double> masses;
};

/// All of the target's mass placed on its leftmost sub-interval of length
/// `lambda`; the rest of the target is left empty.
struct SubIntervalReplacement {
  double lambda = 0.0;
  double mass = 0.0;
};

struct RedistributionPlan {
  CellAddress target;
  std::variant<CellMassReplacement, SubIntervalReplacement> replacement;
  /// Set when the reclaimed piece sits exactly at the reclaim bound, where
  /// neither opponent keeps it in the limit.
  bool degenerate = false;
};

/// Applies a cell-mass plan. Sub-interval plans change the division itself;
/// use split_division for those.
LevelMeasure redistribute(const LevelMeasure& mu, const RedistributionPlan& plan);

/// A finite division of [0, 1) with the two opponents' masses on each piece.
struct Division {
  std::vector<std::string> labels;
  std::vector<double> lambda;
  std::vector<double> mu;
  std::vector<double> nu;

  std::size_t size() const { return labels.size(); }
  double lambda_of(std::span<const std::size_t> cells) const;
};

double reclaim_bound(const LevelMeasure& mu1, const LevelMeasure& nu1, const CellAddress& s);

RedistributionPlan extremal_reclaim_plan(const LevelMeasure& mu1, const LevelMeasure& nu1,
                                         const CellAddress& s, double sub_lambda);

/// The level division with the plan's target split into the reclaimed piece
/// and its complement. nu is uniform inside the target, so its share of the
/// piece is proportional to length.
Division split_division(const LevelMeasure& mu1, const LevelMeasure& nu1,
                        const RedistributionPlan& plan);

struct ReclaimOutcome {
  Division division;
  SignedDecomposition decomposition;
  LimitMasses limits;
  std::size_t reclaimed = 0;
  double mu_limit = 0.0;
  double nu_limit = 0.0;
  bool degenerate = false;
};

ReclaimOutcome evaluate_reclaim(const LevelMeasure& mu1, const LevelMeasure& nu1,
                                const RedistributionPlan& plan, double sign_tol = kSignTolerance);

struct ReversalCell {
  int m = 0;
  int depth = 0;
  CellAddress address;
};

/// First depth at which the chain (s, m, ..., m) turns a lost index into a
/// won cell, m being the index with the largest p_i / r_i.
ReversalCell find_reversal_cell(const StochasticVector& p, const StochasticVector& r, int s);
ReversalCell find_reversal_cell(const StructureMatrix& P, const StructureMatrix& R, int s);

struct ReversalMass {
  int depth = 0;
  /// Closed-form limit mass of mu on level-`depth` cells below s.
  double mass = 0.0;
  double bound = 0.0;
  bool holds = false;
};

ReversalMass reversal_mass_bound(const StochasticVector& p, const StochasticVector& r, int s,
                                 int depth);

struct StrategyResult {
  int depth = 0;
  int losing_index = 0;
  /// Scale t of the perturbation; row l moves by t * weight_l.
  double delta = 0.0;
  std::vector<double> level_deltas;
  /// True when the single-losing-index hypothesis failed and every row up to
  /// the target depth was perturbed instead.
  bool generalized = false;
  StructureMatrix perturbed;
  Division division;
  SignedDecomposition decomposition;
  LimitMasses limits;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  double lambda_zero = 0.0;
  std::vector<Inequality> checks;
  bool verified = false;
};

/// Perturbs mu's structure toward nu's so that, at the first depth whose
/// cells are no longer than epsilon, mu wins everywhere except one cell.
StrategyResult occupation_strategy(const StructureMatrix& P, const StructureMatrix& R,
                                   double epsilon, const PartitionScheme& scheme,
                                   double sign_tol = kSignTolerance);

struct DistanceReport {
  std::vector<double> distances;  // D_1 .. D_kmax
  std::vector<bool> violations;   // violations[i]: D_{i+1} > D_{i+2} + slack
  bool monotone = true;
};

DistanceReport check_distance_monotone(const StructureMatrix& P, const StructureMatrix& R,
                                       int k_max, double slack = 1e-12);

}  // namespace conflict
