#include "conflict/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "conflict/error.hpp"

namespace conflict {

namespace {

constexpr double kConservationTolerance = 1e-12;

std::string fmt(double value) {
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

std::size_t first_descendant(const CellAddress& target, int n, int level) {
  std::size_t index = linear_index(target, n);
  for (int l = static_cast<int>(target.depth()); l < level; ++l) index *= static_cast<std::size_t>(n);
  return index;
}

}  // namespace

LevelMeasure redistribute(const LevelMeasure& mu, const RedistributionPlan& plan) {
  const auto* cells = std::get_if<CellMassReplacement>(&plan.replacement);
  if (cells == nullptr) {
    throw ValidationError("a sub-interval plan changes the division; use split_division");
  }
  const auto& scheme = mu.scheme();
  const int n = scheme.branching();
  const int depth = static_cast<int>(plan.target.depth());
  if (depth > mu.level()) {
    throw ValidationError("target " + plan.target.to_string() + " is finer than level " +
                          std::to_string(mu.level()));
  }
  scheme.check_address(plan.target);
  const std::size_t count = cell_count(n, mu.level() - depth);
  if (cells->masses.size() != count) {
    throw ValidationError("plan for " + plan.target.to_string() + " needs " +
                          std::to_string(count) + " masses, got " +
                          std::to_string(cells->masses.size()));
  }
  const std::size_t first = first_descendant(plan.target, n, mu.level());
  double before = 0.0;
  double after = 0.0;
  for (std::size_t j = 0; j < count; ++j) {
    const double m = cells->masses[j];
    if (!std::isfinite(m) || m < 0.0) {
      throw ValidationError("plan masses must be finite and non-negative");
    }
    before += mu[first + j];
    after += m;
  }
  if (std::abs(after - before) > kConservationTolerance) {
    throw ValidationError("plan moves " + fmt(after) + " but " + plan.target.to_string() +
                          " holds " + fmt(before));
  }
  std::vector<double> masses(mu.masses().begin(), mu.masses().end());
  std::copy(cells->masses.begin(), cells->masses.end(), masses.begin() + static_cast<long>(first));
  return LevelMeasure(scheme, mu.level(), std::move(masses));
}

double Division::lambda_of(std::span<const std::size_t> cells) const {
  double total = 0.0;
  for (std::size_t c : cells) total += lambda.at(c);
  return total;
}

double reclaim_bound(const LevelMeasure& mu1, const LevelMeasure& nu1, const CellAddress& s) {
  if (!mu1.compatible(nu1)) {
    throw ValidationError("reclaim needs measures on the same scheme and level");
  }
  const double m = mu1.mass(s);
  const double v = nu1.mass(s);
  if (!(m > 0.0 && m < v)) {
    throw ValidationError("cell " + s.to_string() + " is not a lost region: mu = " + fmt(m) +
                          ", nu = " + fmt(v));
  }
  return m / v * mu1.scheme().cell_lambda(s);
}

RedistributionPlan extremal_reclaim_plan(const LevelMeasure& mu1, const LevelMeasure& nu1,
                                         const CellAddress& s, double sub_lambda) {
  const double bound = reclaim_bound(mu1, nu1, s);
  if (!(sub_lambda > 0.0)) {
    throw ValidationError("reclaimed length must be positive");
  }
  if (sub_lambda > bound * (1.0 + 1e-12)) {
    throw ValidationError("reclaimed length " + fmt(sub_lambda) + " exceeds the bound " +
                          fmt(bound) + " for " + s.to_string());
  }
  RedistributionPlan plan;
  plan.target = s;
  plan.replacement = SubIntervalReplacement{std::min(sub_lambda, bound), mu1.mass(s)};
  plan.degenerate = sub_lambda >= bound * (1.0 - 1e-12);
  return plan;
}

Division split_division(const LevelMeasure& mu1, const LevelMeasure& nu1,
                        const RedistributionPlan& plan) {
  if (!mu1.compatible(nu1)) {
    throw ValidationError("split needs measures on the same scheme and level");
  }
  const auto* piece = std::get_if<SubIntervalReplacement>(&plan.replacement);
  if (piece == nullptr) {
    throw ValidationError("split_division needs a sub-interval plan");
  }
  const auto& scheme = mu1.scheme();
  if (static_cast<int>(plan.target.depth()) != mu1.level()) {
    throw ValidationError("target " + plan.target.to_string() + " is not a level-" +
                          std::to_string(mu1.level()) + " cell");
  }
  const double lambda_s = scheme.cell_lambda(plan.target);
  const std::size_t target = linear_index(plan.target, scheme.branching());
  const double mu_s = mu1[target];
  const double nu_s = nu1[target];
  if (!(piece->lambda > 0.0 && piece->lambda < lambda_s)) {
    throw ValidationError("reclaimed length must lie strictly inside the target cell");
  }
  if (!(piece->mass >= 0.0 && piece->mass <= mu_s * (1.0 + 1e-12))) {
    throw ValidationError("reclaimed mass exceeds the target's mass");
  }
  const double fraction = piece->lambda / lambda_s;

  Division division;
  const auto lambdas = scheme.lambdas_at_level(mu1.level());
  const auto cells = scheme.cells_at_level(mu1.level());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    if (c == target) {
      const std::string label = cells[c].to_string();
      division.labels.push_back(label + "/reclaimed");
      division.lambda.push_back(piece->lambda);
      division.mu.push_back(std::min(piece->mass, mu_s));
      division.nu.push_back(nu_s * fraction);
      division.labels.push_back(label + "/rest");
      division.lambda.push_back(lambda_s - piece->lambda);
      division.mu.push_back(std::max(0.0, mu_s - piece->mass));
      division.nu.push_back(nu_s * (1.0 - fraction));
    } else {
      division.labels.push_back(cells[c].to_string());
      division.lambda.push_back(lambdas[c]);
      division.mu.push_back(mu1[c]);
      division.nu.push_back(nu1[c]);
    }
  }
  return division;
}

ReclaimOutcome evaluate_reclaim(const LevelMeasure& mu1, const LevelMeasure& nu1,
                                const RedistributionPlan& plan, double sign_tol) {
  ReclaimOutcome outcome;
  outcome.division = split_division(mu1, nu1, plan);
  outcome.decomposition = hahn_jordan(outcome.division.mu, outcome.division.nu, sign_tol);
  outcome.limits = limit_masses(outcome.decomposition);
  outcome.reclaimed = linear_index(plan.target, mu1.scheme().branching());
  outcome.mu_limit = outcome.limits.mu[outcome.reclaimed];
  outcome.nu_limit = outcome.limits.nu[outcome.reclaimed];
  outcome.degenerate = plan.degenerate;
  return outcome;
}

namespace {

void check_reversal_inputs(const StochasticVector& p, const StochasticVector& r, int s) {
  if (p.size() != r.size()) {
    throw ValidationError("rows have different lengths");
  }
  if (s < 1 || s > static_cast<int>(p.size())) {
    throw ValidationError("index " + std::to_string(s) + " out of range");
  }
  if (p == r) {
    throw ValidationError("the two measures coincide");
  }
  const auto i = static_cast<std::size_t>(s - 1);
  if (!(p[i] > 0.0 && p[i] < r[i])) {
    throw ValidationError("index " + std::to_string(s) + " is not lost: p_s = " + fmt(p[i]) +
                          ", r_s = " + fmt(r[i]));
  }
}

const StochasticVector& self_similar_row(const StructureMatrix& matrix) {
  if (matrix.kind() != StructureKind::SelfSimilar) {
    throw ValidationError("a self-similar matrix is required");
  }
  return matrix.row(1);
}

}  // namespace

ReversalCell find_reversal_cell(const StochasticVector& p, const StochasticVector& r, int s) {
  check_reversal_inputs(p, r, s);
  const auto si = static_cast<std::size_t>(s - 1);
  int m = 0;
  double best = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == si || !(p[i] > r[i])) continue;
    const double ratio = r[i] == 0.0 ? std::numeric_limits<double>::infinity() : p[i] / r[i];
    if (m == 0 || ratio > best) {
      m = static_cast<int>(i) + 1;
      best = ratio;
    }
  }
  if (m == 0) {
    throw ModelError("no index gains under mu although the rows differ");
  }
  const double pm = p[static_cast<std::size_t>(m - 1)];
  const double rm = r[static_cast<std::size_t>(m - 1)];

  constexpr int kMaxDepth = 1'000'000;
  double lhs = p[si];
  double rhs = r[si];
  int k = 1;
  while (!(lhs > rhs)) {
    if (++k > kMaxDepth) {
      throw ModelError("reversal depth exceeds " + std::to_string(kMaxDepth));
    }
    if (rhs < 1e-280) {
      // Products are about to underflow; finish in logarithms.
      const double gap = std::log(r[si] / p[si]);
      const double step = std::log(pm / rm);
      while (!(static_cast<double>(k - 1) * step > gap)) {
        if (++k > kMaxDepth) {
          throw ModelError("reversal depth exceeds " + std::to_string(kMaxDepth));
        }
      }
      break;
    }
    lhs *= pm;
    rhs *= rm;
  }
  std::vector<int> indices(static_cast<std::size_t>(k), m);
  indices[0] = s;
  return {m, k, CellAddress(std::move(indices))};
}

ReversalCell find_reversal_cell(const StructureMatrix& P, const StructureMatrix& R, int s) {
  return find_reversal_cell(self_similar_row(P), self_similar_row(R), s);
}

ReversalMass reversal_mass_bound(const StochasticVector& p, const StochasticVector& r, int s,
                                 int depth) {
  check_reversal_inputs(p, r, s);
  if (depth < 1) {
    throw ValidationError("depth must be at least 1");
  }
  const int n = static_cast<int>(p.size());
  const auto scheme = PartitionScheme::uniform(n);
  const auto mu = measure_from_matrix(StructureMatrix::self_similar(p), scheme, depth);
  const auto nu = measure_from_matrix(StructureMatrix::self_similar(r), scheme, depth);
  const auto limits = limit_masses(hahn_jordan(mu, nu));
  const std::size_t block = cell_count(n, depth - 1);
  const std::size_t first = static_cast<std::size_t>(s - 1) * block;
  double mass = 0.0;
  for (std::size_t c = first; c < first + block; ++c) mass += limits.mu[c];
  const double bound = p[static_cast<std::size_t>(s - 1)];
  return {depth, mass, bound, mass <= bound + 1e-12};
}

namespace {

// Index s with p_s < r_s and p_i > r_i elsewhere, if the row has one.
std::optional<int> single_losing_index(const StochasticVector& p, const StochasticVector& r) {
  std::optional<int> losing;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < r[i]) {
      if (losing) return std::nullopt;
      losing = static_cast<int>(i) + 1;
    } else if (!(p[i] > r[i])) {
      return std::nullopt;
    }
  }
  return losing;
}

// Cells (s^{j-1}, i) for j = 1..k, i != s, plus (s, ..., s), left to right.
std::vector<CellAddress> strategy_cells(int n, int s, int k) {
  std::vector<CellAddress> cells;
  std::vector<int> stem;
  for (int j = 1; j <= k; ++j) {
    for (int i = 1; i <= n; ++i) {
      if (i == s) continue;
      std::vector<int> address = stem;
      address.push_back(i);
      cells.emplace_back(std::move(address));
    }
    stem.push_back(s);
  }
  cells.emplace_back(std::move(stem));
  std::sort(cells.begin(), cells.end());
  return cells;
}

Division strategy_division(const std::vector<CellAddress>& cells, const StructureMatrix& mu,
                           const StructureMatrix& nu, const PartitionScheme& scheme) {
  Division division;
  for (const auto& cell : cells) {
    division.labels.push_back(cell.to_string());
    division.lambda.push_back(scheme.cell_lambda(cell));
    division.mu.push_back(mu.cell_mass(cell));
    division.nu.push_back(nu.cell_mass(cell));
  }
  return division;
}

struct Feasibility {
  bool ok = true;
  std::string failing;
};

}  // namespace

StrategyResult occupation_strategy(const StructureMatrix& P, const StructureMatrix& R,
                                   double epsilon, const PartitionScheme& scheme,
                                   double sign_tol) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ValidationError("epsilon must lie in (0, 1), got " + fmt(epsilon));
  }
  if (!scheme.is_uniform() || !scheme.repeats_last()) {
    throw ValidationError("the occupation strategy needs a uniform partition scheme");
  }
  const int n = scheme.branching();
  if (P.branching() != n || R.branching() != n) {
    throw ValidationError("matrices and scheme disagree on the branching factor");
  }

  int k = 0;
  for (double cell = 1.0; cell > epsilon; cell /= n) ++k;

  for (int l = 1; l <= k; ++l) {
    if (!P.defines(l) || !R.defines(l)) {
      throw ValidationError("level " + std::to_string(l) +
                            " is not defined by both matrices; supply a continuation row");
    }
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
      if (!(P.row(l)[i] > 0.0 && R.row(l)[i] > 0.0)) {
        throw ValidationError("both measures need full support; level " + std::to_string(l) +
                              " has a zero entry");
      }
    }
  }

  // The constructive argument assumes the same single losing index on every
  // level it touches; otherwise fall back to perturbing all k rows.
  std::optional<int> losing = single_losing_index(P.row(1), R.row(1));
  for (int l = 2; l <= k && losing; ++l) {
    if (single_losing_index(P.row(l), R.row(l)) != losing) losing.reset();
  }
  const bool generalized = !losing.has_value();
  int s = losing.value_or(0);
  if (generalized) {
    double worst = -std::numeric_limits<double>::infinity();
    for (int i = 1; i <= n; ++i) {
      const double deficit = R.row(1)[static_cast<std::size_t>(i - 1)] -
                             P.row(1)[static_cast<std::size_t>(i - 1)];
      if (deficit > worst) {
        worst = deficit;
        s = i;
      }
    }
  }
  const auto si = static_cast<std::size_t>(s - 1);
  const int perturbed_levels = generalized ? k : k - 1;

  // Level l moves by t * w_l. Later levels must outweigh the accumulated
  // losses of the earlier ones along the (s, s, ...) stem.
  std::vector<double> weights;
  double accumulated = 0.0;
  for (int l = 1; l <= perturbed_levels; ++l) {
    const auto& r = R.row(l);
    double w = 1.0;
    if (l > 1) {
      double r_max = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i != si) r_max = std::max(r_max, r[i]);
      }
      w = 2.0 * (n - 1) * r_max * accumulated / r[si];
    }
    weights.push_back(w);
    accumulated += w;
  }
  double t_max = std::numeric_limits<double>::infinity();
  for (int l = 1; l <= perturbed_levels; ++l) {
    t_max = std::min(t_max, R.row(l)[si] / (n * weights[static_cast<std::size_t>(l - 1)]));
  }

  std::size_t row_count = std::max(static_cast<std::size_t>(k), P.rows().size());
  if (auto k0 = P.defined_depth()) row_count = static_cast<std::size_t>(*k0);
  auto build = [&](double t) {
    std::vector<StochasticVector> rows;
    for (std::size_t l = 1; l <= row_count; ++l) {
      if (static_cast<int>(l) <= perturbed_levels) {
        const auto& r = R.row(static_cast<int>(l));
        const double d = t * weights[l - 1];
        std::vector<double> row(r.size());
        for (std::size_t i = 0; i < r.size(); ++i) {
          row[i] = (i == si) ? r[i] - d : r[i] + d / (n - 1);
        }
        rows.emplace_back(std::move(row));
      } else {
        rows.push_back(P.row(static_cast<int>(l)));
      }
    }
    return P.kind() == StructureKind::Partial ? StructureMatrix::partial(std::move(rows))
                                              : StructureMatrix::similar(std::move(rows));
  };

  const auto cells = strategy_cells(n, s, k);
  const CellAddress stem(std::vector<int>(static_cast<std::size_t>(k), s));
  auto feasible = [&](double t) {
    const auto tilde = build(t);
    const auto division = strategy_division(cells, tilde, R, scheme);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double d = division.mu[c] - division.nu[c];
      const bool want_minus = cells[c] == stem;
      if (want_minus ? !(d < -sign_tol) : !(d > sign_tol)) {
        return Feasibility{false, cells[c].to_string() + " has mu - nu = " + fmt(d)};
      }
    }
    return Feasibility{};
  };

  double t = 0.0;
  if (perturbed_levels > 0) {
    double lo = 0.0;
    Feasibility probe;
    for (int j = 1; j <= 60; ++j) {
      const double candidate = std::ldexp(t_max, -j);
      probe = feasible(candidate);
      if (probe.ok) {
        lo = candidate;
        break;
      }
    }
    if (!(lo > 0.0)) {
      throw ValidationError("no feasible perturbation found at depth " + std::to_string(k) +
                            " with losing index " + std::to_string(s) + " (largest step " +
                            fmt(t_max) + "): " + probe.failing);
    }
    double hi = t_max;
    if (!feasible(hi * (1.0 - 1e-15)).ok) {
      for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (feasible(mid).ok ? lo : hi) = mid;
      }
    }
    t = 0.5 * hi;
    if (!feasible(t).ok) t = lo;
  } else {
    const auto check = feasible(0.0);
    if (!check.ok) {
      throw ValidationError("depth-1 division does not separate the opponents: " +
                            check.failing);
    }
  }

  auto perturbed = perturbed_levels > 0 ? build(t) : P;
  StrategyResult result{.depth = k,
                        .losing_index = s,
                        .delta = t,
                        .level_deltas = {},
                        .generalized = generalized,
                        .perturbed = perturbed,
                        .division = strategy_division(cells, perturbed, R, scheme),
                        .decomposition = {},
                        .limits = {},
                        .lambda_plus = 0.0,
                        .lambda_minus = 0.0,
                        .lambda_zero = 0.0,
                        .checks = {},
                        .verified = false};
  for (double w : weights) result.level_deltas.push_back(t * w);

  // Everything below is recomputed from the perturbed matrix.
  result.decomposition = hahn_jordan(result.division.mu, result.division.nu, sign_tol);
  result.limits = limit_masses(result.decomposition);
  result.lambda_plus = result.division.lambda_of(result.decomposition.plus);
  result.lambda_minus = result.division.lambda_of(result.decomposition.minus);
  result.lambda_zero = result.division.lambda_of(result.decomposition.zero);

  auto& checks = result.checks;
  const double cell = std::pow(static_cast<double>(n), -k);
  checks.push_back(compare("cell length at depth k <= epsilon", cell, Relation::LessEqual, epsilon,
                           1e-15));
  if (k > 1) {
    checks.push_back(compare("cell length at depth k-1 > epsilon", cell * n, Relation::Greater,
                             epsilon));
  }
  checks.push_back(compare("lambda(plus) >= 1 - epsilon", result.lambda_plus,
                           Relation::GreaterEqual, 1.0 - epsilon, 1e-12));
  checks.push_back(compare("lambda(minus) <= epsilon", result.lambda_minus, Relation::LessEqual,
                           epsilon, 1e-12));
  checks.push_back(compare("division covers [0, 1)",
                           result.lambda_plus + result.lambda_minus + result.lambda_zero,
                           Relation::Equal, 1.0, 1e-12));
  double mu_on_plus = 0.0;
  for (std::size_t c : result.decomposition.plus) mu_on_plus += result.limits.mu[c];
  double nu_on_minus = 0.0;
  for (std::size_t c : result.decomposition.minus) nu_on_minus += result.limits.nu[c];
  checks.push_back(compare("mu limit lives on the plus set", mu_on_plus, Relation::Equal, 1.0,
                           1e-12));
  checks.push_back(compare("nu limit lives on the minus set", nu_on_minus, Relation::Equal, 1.0,
                           1e-12));
  for (int l = 1; l <= perturbed_levels; ++l) {
    const double p_tilde = result.perturbed.row(l)[si];
    const double r_s = R.row(l)[si];
    const std::string level = "level " + std::to_string(l);
    checks.push_back(compare(level + " perturbed loser share > (n-1)/n r_s", p_tilde,
                             Relation::Greater, (n - 1.0) / n * r_s));
    checks.push_back(compare(level + " perturbed loser share < r_s", p_tilde, Relation::Less, r_s));
  }
  result.verified = std::all_of(checks.begin(), checks.end(),
                                [](const Inequality& c) { return c.holds; });
  return result;
}

DistanceReport check_distance_monotone(const StructureMatrix& P, const StructureMatrix& R,
                                       int k_max, double slack) {
  if (k_max < 1) {
    throw ValidationError("k_max must be at least 1");
  }
  if (P.branching() != R.branching()) {
    throw ValidationError("matrices disagree on the branching factor");
  }
  for (int k = 1; k <= k_max; ++k) {
    if (!P.defines(k) || !R.defines(k)) {
      throw ValidationError("level " + std::to_string(k) +
                            " is not defined by both matrices; supply a continuation row");
    }
  }
  const auto scheme = PartitionScheme::uniform(P.branching());
  auto mu = LevelMeasure::whole(scheme);
  auto nu = LevelMeasure::whole(scheme);
  DistanceReport report;
  for (int k = 1; k <= k_max; ++k) {
    mu = refine(mu, P.row(k));
    nu = refine(nu, R.row(k));
    report.distances.push_back(variation_distance(mu, nu));
  }
  for (std::size_t i = 0; i + 1 < report.distances.size(); ++i) {
    const bool violated = report.distances[i] > report.distances[i + 1] + slack;
    report.violations.push_back(violated);
    if (violated) report.monotone = false;
  }
  return report;
}

}  // namespace conflict
