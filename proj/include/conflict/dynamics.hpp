#pragma once

// Discrete conflict iteration on a fixed level-k partition.
//
//   mu'(a) = [mu(a) (theta + 1) - tau(a)] / z,   nu'(a) = [nu(a) (theta + 1) - tau(a)] / z
//   z = theta + 1 - W,  W = sum_a tau(a)
//
// tau is the occupation measure: each opponent's presence on the territory
// the starting signed measure mu - nu assigns to the other side.

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "conflict/measures.hpp"

namespace conflict {

/// Pairing of the two measures that scales the growth term.
class ThetaKind {
 public:
  enum class Kind { InnerProduct, Bhattacharyya, Kernel };

  static ThetaKind inner_product();
  static ThetaKind bhattacharyya();

  /// `matrix` is the operator in the L2-orthonormal cell basis
  /// chi_a / sqrt(lambda_a); it must be non-negative, symmetric and positive
  /// semidefinite. The identity reproduces the Bhattacharyya pairing.
  static ThetaKind kernel(std::vector<std::vector<double>> matrix);

  /// Converts a kernel that is constant (value k_ab) on each product cell
  /// into the orthonormal-basis matrix k_ab * sqrt(lambda_a lambda_b).
  static ThetaKind piecewise_constant_kernel(const std::vector<std::vector<double>>& values,
                                             std::span<const double> lambdas);

  Kind kind() const { return kind_; }
  const std::vector<std::vector<double>>& matrix() const { return matrix_; }
  std::string name() const;

  double evaluate(std::span<const double> mu, std::span<const double> nu) const;

 private:
  explicit ThetaKind(Kind kind) : kind_(kind) {}

  Kind kind_;
  std::vector<std::vector<double>> matrix_;
};

double theta(const LevelMeasure& mu, const LevelMeasure& nu, const ThetaKind& kind);

/// How cells with mu = nu at the start enter the occupation measure.
enum class NullCellPolicy {
  JoinPositive,  // tied cells belong to the mu side of the partition (tau = nu there)
  Excluded,      // tau = 0 on tied cells
};

enum class UpdateLaw {
  Occupation,     // tau from the frozen starting sign partition
  LegacyProduct,  // tau_a = mu_a nu_a, kept for comparison
};

struct DynamicsOptions {
  double tol = 1e-10;
  long max_iter = 100000;
  /// Record every m-th state; 0 keeps only the first and last.
  long record_every = 1;
  UpdateLaw law = UpdateLaw::Occupation;
  NullCellPolicy null_cells = NullCellPolicy::JoinPositive;
  double sign_tol = kSignTolerance;
  /// Negative numerators down to -clamp_tol are rounding noise and clamp to 0.
  double clamp_tol = 1e-12;
  double z_floor = 1e-12;
};

std::vector<double> occupation(std::span<const double> mu, std::span<const double> nu,
                               const SignedDecomposition& signs,
                               NullCellPolicy policy = NullCellPolicy::JoinPositive);

struct ConflictState {
  long step = 0;
  LevelMeasure mu;
  LevelMeasure nu;
  /// Sign partition of the starting pair; never recomputed.
  std::shared_ptr<const SignedDecomposition> signs;
  double theta = 0.0;
  double W = 0.0;
  double z = 0.0;
  std::vector<double> tau;
  /// Cells clamped from a tiny negative value while producing this state.
  int clamped = 0;
  /// Sup-norm change from the previous step; 0 for the starting state.
  double residual = 0.0;
};

ConflictState initial_state(LevelMeasure mu, LevelMeasure nu, const ThetaKind& kind,
                            const DynamicsOptions& options = {});

ConflictState step(const ConflictState& state, const ThetaKind& kind,
                   const DynamicsOptions& options = {});

struct Trajectory {
  std::vector<ConflictState> states;
  bool converged = false;
  long iterations = 0;
  /// Sup-norm change of the last step.
  double residual = 0.0;
  /// Sup-norm distance of the final state to the closed-form limit; empty
  /// when the starting measures coincide.
  std::optional<double> distance_to_closed_form;
  long clamp_events = 0;

  const ConflictState& final_state() const { return states.back(); }
};

Trajectory iterate(LevelMeasure mu0, LevelMeasure nu0, const ThetaKind& kind,
                   const DynamicsOptions& options = {});

enum class FixedPointClass { Identical, Orthogonal, NotFixed };

const char* to_string(FixedPointClass value);

FixedPointClass classify_fixed_point(std::span<const double> mu, std::span<const double> nu,
                                     double tol);
FixedPointClass classify_fixed_point(const LevelMeasure& mu, const LevelMeasure& nu, double tol);

/// Checks that mu gains on its winning cells and loses on the others along a
/// fully recorded trajectory.
struct SeparationCheck {
  bool monotone = true;
  std::optional<long> first_violation;
  double worst_gap = 0.0;
};

SeparationCheck check_monotone_separation(const Trajectory& trajectory, double slack = 1e-13);

}  // namespace conflict
