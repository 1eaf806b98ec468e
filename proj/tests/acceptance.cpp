// Runs every acceptance criterion and prints one PASS/FAIL line per
// criterion. Reference values come from the oracles in support.hpp or from
// direct arithmetic here, never from the routine under test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "conflict/control.hpp"
#include "conflict/dynamics.hpp"
#include "conflict/measures.hpp"
#include "support.hpp"

using namespace conflict;

namespace {

constexpr std::uint64_t kSeed = 20240611;

// Every probability vector seen by criteria 3-8 passes through here.
struct SimplexAudit {
  long vectors = 0;
  double worst_sum = 0.0;
  double most_negative = 0.0;

  void add(std::span<const double> v) {
    ++vectors;
    double total = 0.0;
    for (double x : v) {
      total += x;
      most_negative = std::min(most_negative, x);
    }
    worst_sum = std::max(worst_sum, std::abs(total - 1.0));
  }
  bool ok(double tol) const { return worst_sum <= tol && most_negative >= -tol; }
};

SimplexAudit audit;

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string note;

  void require(bool condition, const std::string& what) {
    if (!condition && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::vector<double> uniform_row(int n) { return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n); }

// Concentrating opponent: (n-1)/n on index 1, the rest spread evenly.
std::vector<double> concentrating_row(int n) {
  std::vector<double> r(static_cast<std::size_t>(n), 1.0 / (n * (n - 1.0)));
  r[0] = (n - 1.0) / n;
  return r;
}

LevelMeasure uniform_level(const std::vector<double>& masses, int n, int level) {
  return LevelMeasure(PartitionScheme::uniform(n), level, masses);
}

Outcome gap_level_one() {
  Outcome out;
  for (int n : {3, 4, 5}) {
    const auto p = uniform_row(n);
    const auto r = concentrating_row(n);
    const auto mu = measure_from_matrix(testing::self_similar(p), PartitionScheme::uniform(n), 1);
    const auto nu = measure_from_matrix(testing::self_similar(r), PartitionScheme::uniform(n), 1);
    const auto split = hahn_jordan(mu, nu);
    const auto [mu_inf, nu_inf] = limit_state_closed_form(mu, nu);
    const double expected_d = (n - 2.0) / n;
    out.require(std::abs(split.total_difference - expected_d) <= 1e-12,
                "D_1 for n=" + std::to_string(n));
    out.require(std::abs(nu_inf[0] - 1.0) <= 1e-12, "nu limit on s for n=" + std::to_string(n));
    out.require(mu_inf[0] == 0.0, "mu limit on s for n=" + std::to_string(n));
    for (int i = 1; i < n; ++i) {
      const auto c = static_cast<std::size_t>(i);
      out.require(std::abs(mu_inf[c] - 1.0 / (n - 1)) <= 1e-12,
                  "mu limit off s for n=" + std::to_string(n));
      out.require(nu_inf[c] == 0.0, "nu limit off s for n=" + std::to_string(n));
    }
  }
  return out;
}

Outcome gap_level_two() {
  Outcome out;
  for (int n : {3, 4, 5}) {
    const auto p = uniform_row(n);
    const auto r = concentrating_row(n);
    const auto scheme = PartitionScheme::uniform(n);
    const auto mu = measure_from_matrix(testing::self_similar(p), scheme, 2);
    const auto nu = measure_from_matrix(testing::self_similar(r), scheme, 2);
    const auto split = hahn_jordan(mu, nu);
    const auto [mu_inf, nu_inf] = limit_state_closed_form(mu, nu);
    const double d1 = testing::half_l1(p, r);
    const double expected_d = 1.0 - 2.0 / n;
    out.require(std::abs(split.total_difference - expected_d) <= 1e-12, "D_2 = 1 - 2/n");
    out.require(std::abs(split.total_difference - d1) <= 1e-12, "D_2 = D_1");
    for (std::size_t c = 0; c < mu.size(); ++c) {
      const auto a = address_at(c, n, 2);
      const bool one_s = (a[0] == 1) != (a[1] == 1);
      const bool gap = mu_inf[c] == 0.0 && nu_inf[c] == 0.0;
      out.require(gap == one_s, "gap cells are those with exactly one index s, cell " + a.to_string());
    }
    out.require(std::abs(nu_inf[0] - 1.0) <= 1e-12, "nu limit 1 on (s,s)");
  }
  return out;
}

Outcome dynamics_vs_closed_form() {
  Outcome out;
  testing::Gen gen(kSeed);
  DynamicsOptions options;
  options.tol = 1e-13;
  options.max_iter = 100000;
  long most_steps = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = gen.integer(2, 6);
    const int level = gen.integer(1, 3);
    const auto p_rows = gen.rows(n, level);
    const auto r_rows = gen.rows(n, level);
    const auto p = testing::oracle_masses(p_rows, level);
    const auto r = testing::oracle_masses(r_rows, level);
    const auto oracle = testing::oracle_limit(p, r);
    for (const auto& kind : {ThetaKind::inner_product(), ThetaKind::bhattacharyya()}) {
      const auto t = iterate(uniform_level(p, n, level), uniform_level(r, n, level), kind, options);
      const std::string tag = "trial " + std::to_string(trial) + " " + kind.name();
      out.require(t.converged && t.iterations <= 100000, tag + " did not converge");
      const auto& last = t.final_state();
      most_steps = std::max(most_steps, t.iterations);
      worst = std::max({worst, testing::sup_diff(oracle.mu, last.mu.masses()),
                        testing::sup_diff(oracle.nu, last.nu.masses())});
      out.require(testing::sup_diff(oracle.mu, last.mu.masses()) <= 1e-6, tag + " mu limit");
      out.require(testing::sup_diff(oracle.nu, last.nu.masses()) <= 1e-6, tag + " nu limit");
      for (const auto& state : t.states) {
        audit.add(state.mu.masses());
        audit.add(state.nu.masses());
      }
    }
  }
  char note[96];
  std::snprintf(note, sizeof note, "most steps %ld, worst sup distance %.3g", most_steps, worst);
  out.note = note;
  return out;
}

Outcome fixed_points() {
  Outcome out;
  testing::Gen gen(kSeed + 1);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = gen.integer(2, 6);
    const int level = gen.integer(1, 2);
    const auto p = testing::oracle_masses(gen.rows(n, level), level);
    // Orthogonal partner: mass on the cells p is not given.
    const auto cells = p.size();
    std::vector<double> a(cells, 0.0), b(cells, 0.0);
    const std::size_t cut = static_cast<std::size_t>(gen.integer(1, static_cast<int>(cells) - 1));
    double sa = 0.0, sb = 0.0;
    for (std::size_t c = 0; c < cells; ++c) (c < cut ? sa : sb) += p[c];
    for (std::size_t c = 0; c < cells; ++c) (c < cut ? a[c] = p[c] / sa : b[c] = p[c] / sb);
    const std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs{{p, p}, {a, b}};
    for (const auto& [x, y] : pairs) {
      for (const auto& kind : {ThetaKind::inner_product(), ThetaKind::bhattacharyya()}) {
        auto state = initial_state(uniform_level(x, n, level), uniform_level(y, n, level), kind);
        for (int s = 0; s < 100; ++s) {
          state = step(state, kind);
          audit.add(state.mu.masses());
          audit.add(state.nu.masses());
        }
        out.require(testing::sup_diff(x, state.mu.masses()) <= 1e-12, "mu moved off a fixed point");
        out.require(testing::sup_diff(y, state.nu.masses()) <= 1e-12, "nu moved off a fixed point");
      }
    }
  }
  return out;
}

Outcome distance_monotone() {
  Outcome out;
  testing::Gen gen(kSeed + 2);
  long violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(2, 5);
    const int k_max = 8;
    const auto kind = gen.integer(0, 1);
    const auto p_rows = kind == 0 ? gen.rows(n, 1) : gen.rows(n, gen.integer(2, k_max));
    const auto r_rows = kind == 0 ? gen.rows(n, 1) : gen.rows(n, gen.integer(2, k_max));
    std::vector<double> distances;
    for (int k = 1; k <= k_max; ++k) {
      const auto p = testing::oracle_masses(p_rows, k);
      const auto r = testing::oracle_masses(r_rows, k);
      audit.add(p);
      audit.add(r);
      distances.push_back(testing::half_l1(p, r));
    }
    for (std::size_t i = 0; i + 1 < distances.size(); ++i) {
      if (distances[i] > distances[i + 1] + 1e-12) ++violations;
    }
    const auto report = check_distance_monotone(testing::similar(p_rows), testing::similar(r_rows), k_max);
    out.require(report.monotone, "library reports a violation in trial " + std::to_string(trial));
    for (std::size_t i = 0; i < distances.size(); ++i) {
      out.require(std::abs(report.distances[i] - distances[i]) <= 1e-12,
                  "library D_k disagrees with the oracle in trial " + std::to_string(trial));
    }
  }
  out.require(violations == 0, std::to_string(violations) + " violations");
  return out;
}

Outcome reclaim() {
  Outcome out;
  testing::Gen gen(kSeed + 3);
  int instances = 0;
  while (instances < 50) {
    const int n = gen.integer(2, 6);
    const auto p = gen.row(n);
    const auto r = gen.row(n);
    const int s = gen.integer(1, n);
    const auto si = static_cast<std::size_t>(s - 1);
    if (!(p[si] < r[si])) continue;
    ++instances;
    const auto mu = uniform_level(p, n, 1);
    const auto nu = uniform_level(r, n, 1);
    const double cell = 1.0 / n;
    const double bound = p[si] / r[si] * cell;
    out.require(std::abs(reclaim_bound(mu, nu, CellAddress{s}) - bound) <= 1e-15, "bound");

    for (double fraction : {0.5, 0.9, 0.99, 1.0}) {
      const double piece = fraction * bound;
      // Oracle division: the other cells, then the piece, then the remainder.
      std::vector<double> dm, dn;
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (i == si) continue;
        dm.push_back(p[i]);
        dn.push_back(r[i]);
      }
      dm.push_back(p[si]);
      dn.push_back(r[si] * piece / cell);
      dm.push_back(0.0);
      dn.push_back(r[si] * (1.0 - piece / cell));
      const auto oracle = testing::oracle_limit(dm, dn);
      const std::size_t at = dm.size() - 2;

      const auto plan = extremal_reclaim_plan(mu, nu, CellAddress{s}, piece);
      const auto outcome = evaluate_reclaim(mu, nu, plan);
      audit.add(outcome.division.mu);
      audit.add(outcome.division.nu);
      audit.add(outcome.limits.mu);
      audit.add(outcome.limits.nu);
      const std::string tag = "instance " + std::to_string(instances) + " at " +
                              std::to_string(fraction) + "x bound";
      if (fraction < 1.0) {
        out.require(oracle.mu[at] > 0.0 && oracle.nu[at] == 0.0, tag + " oracle");
        out.require(outcome.mu_limit > 0.0 && outcome.nu_limit == 0.0, tag);
        out.require(std::abs(outcome.mu_limit - oracle.mu[at]) <= 1e-12, tag + " mu limit value");
      } else {
        out.require(std::abs(outcome.mu_limit) <= 1e-12 && std::abs(outcome.nu_limit) <= 1e-12, tag);
        out.require(oracle.mu[at] <= 1e-12 && oracle.nu[at] <= 1e-12, tag + " oracle");
      }
    }
  }
  return out;
}

Outcome reversal() {
  Outcome out;
  testing::Gen gen(kSeed + 4);
  int instances = 0;
  while (instances < 50) {
    const int n = gen.integer(2, 6);
    const auto p = gen.row(n);
    const auto r = gen.row(n);
    const int s = gen.integer(1, n);
    const auto si = static_cast<std::size_t>(s - 1);
    if (!(p[si] < r[si])) continue;
    ++instances;
    const std::string tag = "instance " + std::to_string(instances);

    std::size_t m = si;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (i != si && (m == si || p[i] * r[m] > p[m] * r[i])) m = i;
    }
    const auto cell = find_reversal_cell(StochasticVector(p), StochasticVector(r), s);
    out.require(cell.m == static_cast<int>(m) + 1, tag + " index m");
    // log p_s + (k-1) log p_m > log r_s + (k-1) log r_m
    auto wins = [&](int k) {
      return std::log(p[si]) + (k - 1) * std::log(p[m]) > std::log(r[si]) + (k - 1) * std::log(r[m]);
    };
    out.require(wins(cell.depth), tag + " inequality at k");
    out.require(!wins(cell.depth - 1), tag + " inequality at k-1");

    for (int depth = 1; depth <= 8; ++depth) {
      const auto pm = testing::oracle_masses({p}, depth);
      const auto rm = testing::oracle_masses({r}, depth);
      const auto limit = testing::oracle_limit(pm, rm);
      audit.add(limit.mu);
      audit.add(limit.nu);
      const std::size_t block = pm.size() / static_cast<std::size_t>(n);
      double under_s = 0.0;
      for (std::size_t c = si * block; c < (si + 1) * block; ++c) under_s += limit.mu[c];
      out.require(under_s <= p[si] + 1e-12, tag + " mass under s at depth " + std::to_string(depth));
      const auto library = reversal_mass_bound(StochasticVector(p), StochasticVector(r), s, depth);
      out.require(std::abs(library.mass - under_s) <= 1e-12, tag + " library mass at depth " +
                                                                 std::to_string(depth));
      out.require(library.holds, tag + " library bound flag");
    }
  }
  return out;
}

Outcome occupation_strategy_check() {
  Outcome out;
  const auto scheme = PartitionScheme::uniform(3);
  struct Pair {
    std::vector<double> p, r;
  };
  std::vector<Pair> pairs{{{0.3, 0.35, 0.35}, {0.4, 0.3, 0.3}}};
  testing::Gen gen(kSeed + 5);
  while (pairs.size() < 6) {
    auto p = gen.row(3, 0.1);
    auto r = gen.row(3, 0.1);
    if (p[0] < r[0] && p[1] > r[1] && p[2] > r[2]) pairs.push_back({p, r});
  }
  for (const auto& pair : pairs) {
    for (double eps : {0.4, 0.3, 0.1, 0.05}) {
      int expected = 0;
      while (std::pow(3.0, -expected) > eps) ++expected;
      const auto result = occupation_strategy(testing::self_similar(pair.p),
                                              testing::self_similar(pair.r), eps, scheme);
      const std::string tag = "eps " + std::to_string(eps);
      out.require(result.depth == expected, tag + " depth");
      for (int l = 1; l <= result.depth; ++l) audit.add(result.perturbed.row(l).entries());

      // Rebuild the mixed division from the perturbed rows: (1^(j-1), i) for
      // i != 1, then the stem 1^k.
      std::vector<double> lam, dm, dn;
      double stem_p = 1.0, stem_r = 1.0;
      for (int j = 1; j <= result.depth; ++j) {
        const auto row = result.perturbed.row(j);
        for (std::size_t i = 1; i < 3; ++i) {
          lam.push_back(std::pow(3.0, -j));
          dm.push_back(stem_p * row[i]);
          dn.push_back(stem_r * pair.r[i]);
        }
        stem_p *= row[0];
        stem_r *= pair.r[0];
      }
      lam.push_back(std::pow(3.0, -result.depth));
      dm.push_back(stem_p);
      dn.push_back(stem_r);
      audit.add(lam);
      audit.add(dm);
      audit.add(dn);
      double plus = 0.0, minus = 0.0;
      for (std::size_t c = 0; c < lam.size(); ++c) {
        const double d = dm[c] - dn[c];
        if (d > 1e-12) plus += lam[c];
        if (d < -1e-12) minus += lam[c];
      }
      out.require(plus >= 1.0 - eps, tag + " plus length " + std::to_string(plus));
      out.require(minus <= eps, tag + " minus length " + std::to_string(minus));
      out.require(std::abs(result.lambda_plus - plus) <= 1e-12, tag + " library plus length");
      out.require(std::abs(result.lambda_minus - minus) <= 1e-12, tag + " library minus length");
      out.require(result.verified, tag + " library verification");
      audit.add(result.limits.mu);
      audit.add(result.limits.nu);
    }
  }
  return out;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"uniform vs concentrating, level 1 limits and distance", gap_level_one},
      {"uniform vs concentrating, level 2 gaps and distance", gap_level_two},
      {"iteration matches the closed-form limit (100 pairs, 2 pairings)", dynamics_vs_closed_form},
      {"identical and orthogonal pairs fixed for 100 steps", fixed_points},
      {"variation distance nondecreasing in depth (200 pairs)", distance_monotone},
      {"reclaim below, near and at the bound (50 instances)", reclaim},
      {"reversal cell minimal and mass under s bounded (50 pairs)", reversal},
      {"occupation strategy on the ternary scheme", occupation_strategy_check},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    const std::string extra = outcome.pass ? outcome.note : outcome.detail;
    std::printf("criterion %d %s  %s  (%.2fs)%s%s\n", index, outcome.pass ? "PASS" : "FAIL",
                name.c_str(), seconds, extra.empty() ? "" : "  ", extra.c_str());
  }
  const bool simplex = audit.ok(1e-10);
  if (!simplex) ++failures;
  std::printf("criterion 9 %s  every intermediate state stochastic within 1e-10  "
              "(%ld vectors, worst sum error %.3g, most negative %.3g)\n",
              simplex ? "PASS" : "FAIL", audit.vectors, audit.worst_sum, audit.most_negative);
  return failures == 0 ? 0 : 1;
}
