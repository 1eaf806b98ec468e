#include "conflict/dynamics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "conflict/error.hpp"

namespace conflict {

ThetaKind ThetaKind::inner_product() { return ThetaKind(Kind::InnerProduct); }

ThetaKind ThetaKind::bhattacharyya() { return ThetaKind(Kind::Bhattacharyya); }

ThetaKind ThetaKind::kernel(std::vector<std::vector<double>> matrix) {
  const std::size_t size = matrix.size();
  if (size == 0) {
    throw ValidationError("kernel matrix is empty");
  }
  Eigen::MatrixXd k(static_cast<Eigen::Index>(size), static_cast<Eigen::Index>(size));
  double scale = 0.0;
  for (std::size_t a = 0; a < size; ++a) {
    if (matrix[a].size() != size) {
      throw ValidationError("kernel matrix is not square");
    }
    for (std::size_t b = 0; b < size; ++b) {
      const double v = matrix[a][b];
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError("kernel matrix has a negative or non-finite entry");
      }
      k(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = v;
      scale = std::max(scale, v);
    }
  }
  const double sym_tol = 1e-12 * std::max(1.0, scale);
  if ((k - k.transpose()).cwiseAbs().maxCoeff() > sym_tol) {
    throw ValidationError("kernel matrix is not symmetric");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) {
    throw ValidationError("kernel eigenvalue check failed to converge");
  }
  if (solver.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, scale)) {
    throw ValidationError("kernel matrix is not positive semidefinite");
  }
  ThetaKind out(Kind::Kernel);
  out.matrix_ = std::move(matrix);
  return out;
}

ThetaKind ThetaKind::piecewise_constant_kernel(const std::vector<std::vector<double>>& values,
                                               std::span<const double> lambdas) {
  if (values.size() != lambdas.size()) {
    throw ValidationError("kernel values do not match the number of cells");
  }
  std::vector<std::vector<double>> matrix(values.size());
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (values[a].size() != lambdas.size()) {
      throw ValidationError("kernel matrix is not square");
    }
    matrix[a].resize(lambdas.size());
    for (std::size_t b = 0; b < lambdas.size(); ++b) {
      matrix[a][b] = values[a][b] * std::sqrt(lambdas[a] * lambdas[b]);
    }
  }
  return kernel(std::move(matrix));
}

std::string ThetaKind::name() const {
  switch (kind_) {
    case Kind::InnerProduct: return "inner-product";
    case Kind::Bhattacharyya: return "bhattacharyya";
    case Kind::Kernel: return "kernel";
  }
  return "unknown";
}

double ThetaKind::evaluate(std::span<const double> mu, std::span<const double> nu) const {
  if (mu.size() != nu.size()) {
    throw ValidationError("theta needs measures on the same cells");
  }
  double value = 0.0;
  switch (kind_) {
    case Kind::InnerProduct:
      for (std::size_t a = 0; a < mu.size(); ++a) value += mu[a] * nu[a];
      return value;
    case Kind::Bhattacharyya:
      // (sqrt(rho), sqrt(sigma)) in L2(lambda) reduces to sum sqrt(p r) for
      // piecewise-uniform densities, whatever the cell lengths.
      for (std::size_t a = 0; a < mu.size(); ++a) value += std::sqrt(mu[a] * nu[a]);
      return value;
    case Kind::Kernel: {
      if (matrix_.size() != mu.size()) {
        throw ValidationError("kernel has " + std::to_string(matrix_.size()) +
                              " rows but the measures have " + std::to_string(mu.size()) +
                              " cells");
      }
      // In the orthonormal cell basis sqrt(rho) has coefficients sqrt(p_a).
      std::vector<double> root_nu(nu.size());
      for (std::size_t b = 0; b < nu.size(); ++b) root_nu[b] = std::sqrt(nu[b]);
      for (std::size_t a = 0; a < mu.size(); ++a) {
        if (mu[a] == 0.0) continue;
        double row = 0.0;
        for (std::size_t b = 0; b < nu.size(); ++b) row += matrix_[a][b] * root_nu[b];
        value += std::sqrt(mu[a]) * row;
      }
      return value;
    }
  }
  return value;
}

double theta(const LevelMeasure& mu, const LevelMeasure& nu, const ThetaKind& kind) {
  if (!mu.compatible(nu)) {
    throw ValidationError("theta needs measures on the same scheme and level");
  }
  return kind.evaluate(mu.masses(), nu.masses());
}

std::vector<double> occupation(std::span<const double> mu, std::span<const double> nu,
                               const SignedDecomposition& signs, NullCellPolicy policy) {
  if (mu.size() != signs.size() || nu.size() != signs.size()) {
    throw ValidationError("sign partition does not cover the measures' cells");
  }
  std::vector<double> tau(mu.size(), 0.0);
  for (std::size_t a = 0; a < mu.size(); ++a) {
    switch (signs.signs[a]) {
      case CellSign::Plus: tau[a] = nu[a]; break;
      case CellSign::Minus: tau[a] = mu[a]; break;
      case CellSign::Zero:
        tau[a] = (policy == NullCellPolicy::JoinPositive) ? nu[a] : 0.0;
        break;
    }
  }
  return tau;
}

namespace {

void fill_fields(ConflictState& state, const ThetaKind& kind, const DynamicsOptions& options) {
  const auto mu = state.mu.masses();
  const auto nu = state.nu.masses();
  state.theta = kind.evaluate(mu, nu);
  if (options.law == UpdateLaw::Occupation) {
    state.tau = occupation(mu, nu, *state.signs, options.null_cells);
  } else {
    state.tau.resize(mu.size());
    for (std::size_t a = 0; a < mu.size(); ++a) state.tau[a] = mu[a] * nu[a];
  }
  state.W = 0.0;
  for (double t : state.tau) state.W += t;
  state.z = state.theta + 1.0 - state.W;
}

std::vector<double> update(std::span<const double> masses, const ConflictState& state,
                           const DynamicsOptions& options, int& clamped) {
  std::vector<double> next(masses.size());
  double sum = 0.0;
  for (std::size_t a = 0; a < masses.size(); ++a) {
    double numerator = masses[a] * (state.theta + 1.0) - state.tau[a];
    if (numerator < 0.0) {
      if (numerator < -options.clamp_tol) {
        throw ModelError("updated mass " + std::to_string(numerator) + " at cell " +
                         std::to_string(a) + " on step " + std::to_string(state.step + 1) +
                         " is negative beyond the clamp tolerance");
      }
      numerator = 0.0;
      ++clamped;
    }
    next[a] = numerator / state.z;
    sum += next[a];
  }
  if (!(sum > 0.0)) {
    throw ModelError("update on step " + std::to_string(state.step + 1) + " removed all mass");
  }
  // The update preserves mass exactly in real arithmetic; dividing by the
  // realized sum only removes rounding drift.
  for (double& m : next) m /= sum;
  return next;
}

}  // namespace

ConflictState initial_state(LevelMeasure mu, LevelMeasure nu, const ThetaKind& kind,
                            const DynamicsOptions& options) {
  if (!mu.compatible(nu)) {
    throw ValidationError("dynamics needs measures on the same scheme and level");
  }
  auto signs = std::make_shared<const SignedDecomposition>(hahn_jordan(mu, nu, options.sign_tol));
  ConflictState state{0, std::move(mu), std::move(nu), std::move(signs), 0.0, 0.0, 0.0, {}, 0};
  fill_fields(state, kind, options);
  return state;
}

ConflictState step(const ConflictState& state, const ThetaKind& kind,
                   const DynamicsOptions& options) {
  if (!(state.z > options.z_floor)) {
    throw ModelError("normalizer z = " + std::to_string(state.z) + " on step " +
                     std::to_string(state.step) + " is degenerate");
  }
  int clamped = 0;
  auto mu = update(state.mu.masses(), state, options, clamped);
  auto nu = update(state.nu.masses(), state, options, clamped);
  ConflictState next{state.step + 1,
                     LevelMeasure(state.mu.scheme(), state.mu.level(), std::move(mu)),
                     LevelMeasure(state.nu.scheme(), state.nu.level(), std::move(nu)),
                     state.signs,
                     0.0,
                     0.0,
                     0.0,
                     {},
                     clamped};
  next.residual = std::max(sup_distance(next.mu.masses(), state.mu.masses()),
                           sup_distance(next.nu.masses(), state.nu.masses()));
  fill_fields(next, kind, options);
  return next;
}

Trajectory iterate(LevelMeasure mu0, LevelMeasure nu0, const ThetaKind& kind,
                   const DynamicsOptions& options) {
  if (options.max_iter < 0 || options.record_every < 0 || !(options.tol > 0.0)) {
    throw ValidationError("dynamics options out of range");
  }
  Trajectory trajectory;
  ConflictState state = initial_state(std::move(mu0), std::move(nu0), kind, options);
  trajectory.states.push_back(state);
  if (state.signs->identical()) {
    trajectory.converged = true;
    return trajectory;
  }
  const LimitMasses closed = limit_masses(*state.signs);

  bool last_recorded = true;
  for (long it = 1; it <= options.max_iter; ++it) {
    ConflictState next = step(state, kind, options);
    trajectory.residual = next.residual;
    trajectory.clamp_events += next.clamped;
    trajectory.iterations = it;
    state = std::move(next);
    last_recorded = options.record_every > 0 && it % options.record_every == 0;
    if (last_recorded) trajectory.states.push_back(state);
    if (trajectory.residual < options.tol) {
      trajectory.converged = true;
      break;
    }
  }
  if (!last_recorded) trajectory.states.push_back(state);
  trajectory.distance_to_closed_form =
      std::max(sup_distance(state.mu.masses(), closed.mu), sup_distance(state.nu.masses(), closed.nu));
  return trajectory;
}

const char* to_string(FixedPointClass value) {
  switch (value) {
    case FixedPointClass::Identical: return "identical";
    case FixedPointClass::Orthogonal: return "orthogonal";
    case FixedPointClass::NotFixed: return "not-fixed";
  }
  return "unknown";
}

FixedPointClass classify_fixed_point(std::span<const double> mu, std::span<const double> nu,
                                     double tol) {
  if (sup_distance(mu, nu) < tol) return FixedPointClass::Identical;
  double overlap = 0.0;
  for (std::size_t a = 0; a < mu.size(); ++a) overlap += std::min(mu[a], nu[a]);
  if (overlap < tol) return FixedPointClass::Orthogonal;
  return FixedPointClass::NotFixed;
}

FixedPointClass classify_fixed_point(const LevelMeasure& mu, const LevelMeasure& nu, double tol) {
  if (!mu.compatible(nu)) {
    throw ValidationError("classification needs measures on the same scheme and level");
  }
  return classify_fixed_point(mu.masses(), nu.masses(), tol);
}

SeparationCheck check_monotone_separation(const Trajectory& trajectory, double slack) {
  SeparationCheck check;
  if (trajectory.states.empty()) return check;
  const auto& signs = *trajectory.states.front().signs;
  double prev_plus = trajectory.states.front().mu.mass_of(signs.plus);
  double prev_minus = trajectory.states.front().mu.mass_of(signs.minus);
  for (std::size_t i = 1; i < trajectory.states.size(); ++i) {
    const auto& state = trajectory.states[i];
    const double plus = state.mu.mass_of(signs.plus);
    const double minus = state.mu.mass_of(signs.minus);
    const double gap = std::max(prev_plus - plus, minus - prev_minus);
    if (gap > slack) {
      check.worst_gap = std::max(check.worst_gap, gap);
      if (check.monotone) check.first_violation = state.step;
      check.monotone = false;
    }
    prev_plus = plus;
    prev_minus = minus;
  }
  return check;
}

}  // namespace conflict
