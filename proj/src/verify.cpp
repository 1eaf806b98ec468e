#include "conflict/verify.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "conflict/control.hpp"
#include "conflict/dynamics.hpp"
#include "conflict/error.hpp"

namespace conflict {

const char* to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Fail: return "fail";
    case CheckStatus::Unverifiable: return "unverifiable";
    case CheckStatus::Info: return "info";
  }
  return "unknown";
}

std::size_t VerifySummary::count(CheckStatus status) const {
  std::size_t n = 0;
  for (const auto& c : checks) n += c.status == status ? 1 : 0;
  return n;
}

namespace {

class Recorder {
 public:
  Recorder(VerifySummary& summary, std::string suite) : summary_(summary), suite_(std::move(suite)) {}

  void check(const std::string& claim, const Inequality& c) {
    push(claim, c, c.holds ? CheckStatus::Pass : CheckStatus::Fail);
  }
  void info(const std::string& name, const std::string& claim, double value) {
    push(claim, Inequality{name, value, Relation::Equal, value, 0.0, true}, CheckStatus::Info);
  }
  void unverifiable(const std::string& claim, const Inequality& c) {
    push(claim, c, CheckStatus::Unverifiable);
  }

 private:
  void push(const std::string& claim, const Inequality& c, CheckStatus status) {
    summary_.checks.push_back(
        {suite_, c.name, claim, c.lhs, c.relation, c.rhs, c.tolerance, status});
  }

  VerifySummary& summary_;
  std::string suite_;
};

std::vector<double> random_row(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> draw(0.05, 1.0);
  std::vector<double> row(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& x : row) total += (x = draw(rng));
  for (double& x : row) x /= total;
  return row;
}

StructureMatrix self_similar(std::vector<double> row) {
  return StructureMatrix::self_similar(StochasticVector(std::move(row)));
}

// Uniform opponent against one holding (n-1)/n on index s.
std::pair<StructureMatrix, StructureMatrix> spectral_pair(int n, int s) {
  std::vector<double> p(static_cast<std::size_t>(n), 1.0 / n);
  std::vector<double> r(static_cast<std::size_t>(n), 1.0 / (n * (n - 1.0)));
  r[static_cast<std::size_t>(s - 1)] = (n - 1.0) / n;
  return {self_similar(p), self_similar(r)};
}

std::string str(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

void spectral_gaps(Recorder& rec, std::uint64_t) {
  const int s = 1;
  for (int n : {3, 4, 5}) {
    const auto [P, R] = spectral_pair(n, s);
    const auto scheme = PartitionScheme::uniform(n);
    const std::string tag = "n=" + std::to_string(n) + ": ";
    const auto mu1 = measure_from_matrix(P, scheme, 1);
    const auto nu1 = measure_from_matrix(R, scheme, 1);
    const auto lim1 = limit_masses(mu1.masses(), nu1.masses());
    rec.check("level-1 distance equals r_s - p_s = (n-2)/n",
              compare(tag + "D_1", variation_distance(mu1, nu1), Relation::Equal,
                      (n - 2.0) / n, 1e-12));
    double worst = 0.0;
    for (int i = 1; i <= n; ++i) {
      const auto c = static_cast<std::size_t>(i - 1);
      const double want_mu = i == s ? 0.0 : 1.0 / (n - 1);
      const double want_nu = i == s ? 1.0 : 0.0;
      worst = std::max({worst, std::abs(lim1.mu[c] - want_mu), std::abs(lim1.nu[c] - want_nu)});
    }
    rec.check("level-1 limits are 1/(n-1) off s for mu and 1 on s for nu",
              compare(tag + "sup error of level-1 limits", worst, Relation::LessEqual, 0.0, 1e-12));

    const auto mu2 = measure_from_matrix(P, scheme, 2);
    const auto nu2 = measure_from_matrix(R, scheme, 2);
    const auto lim2 = limit_masses(mu2.masses(), nu2.masses());
    rec.check("level-2 distance equals level-1 distance, 1 - 2/n",
              compare(tag + "D_2", variation_distance(mu2, nu2), Relation::Equal, 1.0 - 2.0 / n,
                      1e-12));
    double gap_error = 0.0;
    double nu_ss = 0.0;
    for (std::size_t c = 0; c < mu2.size(); ++c) {
      const auto a = address_at(c, n, 2);
      const int hits = (a[0] == s) + (a[1] == s);
      if (hits == 1) {
        gap_error = std::max({gap_error, lim2.mu[c], lim2.nu[c]});
      } else if (hits == 0) {
        gap_error = std::max(gap_error, std::abs(lim2.mu[c] - 1.0 / ((n - 1.0) * (n - 1.0))));
      } else {
        nu_ss = lim2.nu[c];
      }
    }
    rec.check("level-2 gaps exactly on cells with one index s; mu limit 1/(n-1)^2 elsewhere",
              compare(tag + "sup error of level-2 gap pattern", gap_error, Relation::LessEqual, 0.0,
                      1e-12));
    rec.check("level-2 nu limit is concentrated on (s,s)",
              compare(tag + "nu limit on (s,s)", nu_ss, Relation::Equal, 1.0, 1e-12));
  }

  // The cascade continues: at level k nu keeps exactly the cells where s
  // appears in more than half of the positions.
  const auto [P, R] = spectral_pair(3, s);
  const auto scheme = PartitionScheme::uniform(3);
  const double expected[] = {1.0 / 3.0, 1.0 / 9.0, 7.0 / 27.0};
  for (int k = 1; k <= 3; ++k) {
    const auto [mu_inf, nu_inf] = limit_state_closed_form(measure_from_matrix(P, scheme, k),
                                                          measure_from_matrix(R, scheme, k));
    const auto lambdas = scheme.lambdas_at_level(k);
    double support = 0.0;
    for (std::size_t c = 0; c < lambdas.size(); ++c) {
      if (nu_inf[c] > 0.0) support += lambdas[c];
    }
    rec.check("nu limit support shrinks to the cells dominated by s",
              compare("n=3 level " + std::to_string(k) + " nu support length", support,
                      Relation::Equal, expected[k - 1], 1e-12));
  }
}

void directed_priority(Recorder& rec, std::uint64_t) {
  const double eps = 0.3;
  const double first_sum = (2.0 - eps) / 9.0 + (1.0 + eps) / 3.0 + 4.0 / 9.0;
  rec.unverifiable("level-1 weights (2-e)/9, (1+e)/3, 4/9 do not form a probability vector",
                   compare("level-1 row sum (typo)", first_sum, Relation::Equal, 1.0, 1e-12));

  const std::vector<double> row{(9.0 - 3.0 * eps) / 27.0, (9.0 + eps) / 27.0,
                                (9.0 + 2.0 * eps) / 27.0};
  rec.check("deeper-step weights (9-3e)/27, (9+e)/27, (9+2e)/27 are stochastic",
            compare("deeper-step row sum", row[0] + row[1] + row[2], Relation::Equal, 1.0, 1e-15));

  const auto scheme = PartitionScheme::uniform(3);
  const auto P = self_similar({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  const auto R = self_similar(row);
  const auto d2 = hahn_jordan(measure_from_matrix(P, scheme, 2), measure_from_matrix(R, scheme, 2));
  bool matches = d2.minus.size() == 4;
  for (std::size_t c : d2.minus) {
    const auto a = address_at(c, 3, 2);
    matches = matches && a[0] >= 2 && a[1] >= 2;
  }
  rec.check("level-2 minus set is {22, 23, 32, 33}",
            compare("level-2 minus set matches", matches ? 1.0 : 0.0, Relation::Equal, 1.0));
  double lambda_minus = 0.0;
  const auto lambdas = scheme.lambdas_at_level(2);
  for (std::size_t c : d2.minus) lambda_minus += lambdas[c];
  rec.check("level-2 minus set has length 4/9",
            compare("level-2 minus length", lambda_minus, Relation::Equal, 4.0 / 9.0, 1e-12));
  for (int k = 1; k <= 7; ++k) {
    const auto d = hahn_jordan(measure_from_matrix(P, scheme, k), measure_from_matrix(R, scheme, k));
    double total = 0.0;
    const auto ls = scheme.lambdas_at_level(k);
    for (std::size_t c : d.minus) total += ls[c];
    rec.info("level " + std::to_string(k) + " minus length",
             "priority area of the directed opponent by depth (informational)", total);
  }
}

void distance_monotone(Recorder& rec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_n(2, 5);
  std::uniform_int_distribution<int> pick_levels(1, 4);
  long violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = pick_n(rng);
    const int levels = pick_levels(rng);
    std::vector<StochasticVector> p, r;
    for (int l = 0; l < levels; ++l) {
      p.emplace_back(random_row(rng, n));
      r.emplace_back(random_row(rng, n));
    }
    const auto report = check_distance_monotone(StructureMatrix::similar(p),
                                                StructureMatrix::similar(r), 8);
    for (bool v : report.violations) violations += v ? 1 : 0;
  }
  rec.check("distances between level approximations never decrease (200 random pairs, k <= 8)",
            compare("violations", static_cast<double>(violations), Relation::Equal, 0.0));
  const auto [P, R] = spectral_pair(3, 1);
  const auto spectral = check_distance_monotone(P, R, 2);
  rec.check("spectral-gap pair keeps its distance from level 1 to level 2",
            compare("D_2 - D_1", spectral.distances[1] - spectral.distances[0], Relation::Equal, 0.0,
                    1e-12));
}

void reclaim(Recorder& rec, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 1);
  std::uniform_int_distribution<int> pick_n(2, 6);
  int instances = 0;
  long failures = 0;
  double worst_degenerate = 0.0;
  while (instances < 50) {
    const int n = pick_n(rng);
    const auto scheme = PartitionScheme::uniform(n);
    const LevelMeasure mu(scheme, 1, random_row(rng, n));
    const LevelMeasure nu(scheme, 1, random_row(rng, n));
    int s = 0;
    for (int i = 1; i <= n; ++i) {
      if (mu[static_cast<std::size_t>(i - 1)] < nu[static_cast<std::size_t>(i - 1)] - 1e-9) s = i;
    }
    if (s == 0) continue;
    ++instances;
    const CellAddress target{s};
    const double bound = reclaim_bound(mu, nu, target);
    for (double f : {0.5, 0.9, 0.99}) {
      const auto out = evaluate_reclaim(mu, nu, extremal_reclaim_plan(mu, nu, target, f * bound));
      if (!(out.mu_limit > 0.0) || std::abs(out.nu_limit) > 1e-12) ++failures;
    }
    const auto edge = evaluate_reclaim(mu, nu, extremal_reclaim_plan(mu, nu, target, bound));
    worst_degenerate = std::max({worst_degenerate, edge.mu_limit, edge.nu_limit});
  }
  rec.check("below the bound mu keeps the reclaimed piece and nu loses it (50 instances)",
            compare("failed plans", static_cast<double>(failures), Relation::Equal, 0.0));
  rec.check("at the bound both limits on the piece vanish",
            compare("largest limit on the piece", worst_degenerate, Relation::LessEqual, 0.0, 1e-12));
}

void reversal(Recorder& rec, std::uint64_t seed) {
  const StochasticVector p({0.3, 0.7});
  const StochasticVector r({0.6, 0.4});
  const auto cell = find_reversal_cell(p, r, 1);
  rec.check("p=(0.3,0.7), r=(0.6,0.4), s=1 reverses along index 2",
            compare("m", cell.m, Relation::Equal, 2.0));
  rec.check("p=(0.3,0.7), r=(0.6,0.4), s=1 reverses at depth 3",
            compare("k", cell.depth, Relation::Equal, 3.0));
  const auto zero = find_reversal_cell(StochasticVector({0.2, 0.3, 0.5}),
                                       StochasticVector({0.4, 0.0, 0.6}), 1);
  rec.check("a zero entry for nu reverses at depth 2", compare("k when r_m = 0", zero.depth,
                                                                Relation::Equal, 2.0));

  std::mt19937_64 rng(seed + 2);
  std::uniform_int_distribution<int> pick_n(2, 4);
  long minimal_failures = 0;
  double worst_excess = -1.0;
  int instances = 0;
  while (instances < 50) {
    const int n = pick_n(rng);
    const StochasticVector pv(random_row(rng, n));
    const StochasticVector rv(random_row(rng, n));
    int s = 0;
    for (int i = 1; i <= n && s == 0; ++i) {
      if (pv[static_cast<std::size_t>(i - 1)] < rv[static_cast<std::size_t>(i - 1)]) s = i;
    }
    if (s == 0) continue;
    ++instances;
    const auto found = find_reversal_cell(pv, rv, s);
    const auto si = static_cast<std::size_t>(s - 1);
    const auto mi = static_cast<std::size_t>(found.m - 1);
    auto chain = [&](const StochasticVector& v, int k) { return v[si] * std::pow(v[mi], k - 1); };
    if (!(chain(pv, found.depth) > chain(rv, found.depth))) ++minimal_failures;
    if (found.depth > 1 && chain(pv, found.depth - 1) > chain(rv, found.depth - 1)) {
      ++minimal_failures;
    }
    for (int k = 1; k <= 8; ++k) {
      const auto bound = reversal_mass_bound(pv, rv, s, k);
      worst_excess = std::max(worst_excess, bound.mass - bound.bound);
    }
  }
  rec.check("returned depth is the first where the chain product wins (50 random pairs)",
            compare("non-minimal depths", static_cast<double>(minimal_failures), Relation::Equal,
                    0.0));
  rec.check("limit mass of mu under a lost index never exceeds p_s (k <= 8)",
            compare("largest mass - p_s", worst_excess, Relation::LessEqual, 0.0, 1e-12));
}

void occupation(Recorder& rec, std::uint64_t) {
  const auto scheme = PartitionScheme::uniform(3);
  const auto P = self_similar({0.3, 0.35, 0.35});
  const auto R = self_similar({0.4, 0.3, 0.3});
  const std::map<double, int> depths{{0.4, 1}, {0.3, 2}, {0.1, 3}, {0.05, 3}};
  for (const auto& [eps, k] : depths) {
    const auto result = occupation_strategy(P, R, eps, scheme);
    const std::string tag = "epsilon=" + str(eps) + ": ";
    rec.check("depth is the first with 3^-k <= epsilon",
              compare(tag + "depth", result.depth, Relation::Equal, k));
    rec.check("mu occupies at least 1 - epsilon of the interval",
              compare(tag + "lambda(plus)", result.lambda_plus, Relation::GreaterEqual, 1.0 - eps,
                      1e-12));
    rec.check("nu keeps at most epsilon",
              compare(tag + "lambda(minus)", result.lambda_minus, Relation::LessEqual, eps, 1e-12));
    rec.check("every recomputed strategy inequality holds",
              compare(tag + "verified", result.verified ? 1.0 : 0.0, Relation::Equal, 1.0));
  }
}

void dynamics(Recorder& rec, std::uint64_t seed) {
  std::mt19937_64 rng(seed + 3);
  std::uniform_int_distribution<int> pick_n(2, 6);
  std::uniform_int_distribution<int> pick_level(1, 2);
  double worst = 0.0;
  long unconverged = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = pick_n(rng);
    const int level = pick_level(rng);
    const auto scheme = PartitionScheme::uniform(n);
    const auto mu = measure_from_matrix(self_similar(random_row(rng, n)), scheme, level);
    const auto nu = measure_from_matrix(self_similar(random_row(rng, n)), scheme, level);
    for (const auto& kind : {ThetaKind::inner_product(), ThetaKind::bhattacharyya()}) {
      DynamicsOptions options;
      options.tol = 1e-13;
      options.record_every = 0;
      const auto t = iterate(mu, nu, kind, options);
      if (!t.converged) ++unconverged;
      worst = std::max(worst, t.distance_to_closed_form.value_or(0.0));
    }
  }
  rec.check("iteration reaches the closed-form limit (40 random pairs, two pairings)",
            compare("largest sup distance", worst, Relation::LessEqual, 1e-6));
  rec.check("iteration converges", compare("unconverged runs", static_cast<double>(unconverged),
                                           Relation::Equal, 0.0));

  const auto scheme = PartitionScheme::uniform(4);
  const LevelMeasure a(scheme, 1, {0.5, 0.5, 0.0, 0.0});
  const LevelMeasure b(scheme, 1, {0.0, 0.0, 0.25, 0.75});
  const auto kind = ThetaKind::bhattacharyya();
  for (const auto& [name, mu, nu] :
       {std::tuple{"identical", a, a}, std::tuple{"orthogonal", a, b}}) {
    auto state = initial_state(mu, nu, kind);
    for (int i = 0; i < 100; ++i) state = step(state, kind);
    const double drift = std::max(sup_distance(state.mu.masses(), mu.masses()),
                                  sup_distance(state.nu.masses(), nu.masses()));
    rec.check(std::string(name) + " pairs are fixed points",
              compare(std::string(name) + " drift after 100 steps", drift, Relation::LessEqual, 0.0,
                      1e-12));
  }
}

using SuiteFn = std::function<void(Recorder&, std::uint64_t)>;

const std::vector<std::pair<std::string, SuiteFn>>& registry() {
  static const std::vector<std::pair<std::string, SuiteFn>> suites{
      {"spectral-gaps", spectral_gaps},   {"directed-priority", directed_priority},
      {"distance-monotone", distance_monotone}, {"reclaim", reclaim},
      {"reversal", reversal},             {"occupation", occupation},
      {"dynamics", dynamics}};
  return suites;
}

}  // namespace

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : registry()) out.push_back(name);
    out.push_back("all");
    return out;
  }();
  return names;
}

VerifySummary verify_suite(const std::string& name, std::uint64_t seed) {
  VerifySummary summary;
  bool found = false;
  for (const auto& [suite, fn] : registry()) {
    if (name != "all" && name != suite) continue;
    found = true;
    Recorder rec(summary, suite);
    fn(rec, seed);
  }
  if (!found) {
    std::string known;
    for (const auto& s : verify_suites()) known += (known.empty() ? "" : ", ") + s;
    throw ValidationError("unknown suite '" + name + "'; available: " + known);
  }
  return summary;
}

nlohmann::json to_json(const VerifySummary& summary) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : summary.checks) {
    checks.push_back({{"suite", c.suite},
                      {"name", c.name},
                      {"claim", c.claim},
                      {"computed", c.computed},
                      {"relation", to_string(c.relation)},
                      {"expected", c.expected},
                      {"tolerance", c.tolerance},
                      {"status", to_string(c.status)}});
  }
  return {{"checks", checks},
          {"passed", summary.count(CheckStatus::Pass)},
          {"failed", summary.count(CheckStatus::Fail)},
          {"unverifiable", summary.count(CheckStatus::Unverifiable)},
          {"info", summary.count(CheckStatus::Info)}};
}

}  // namespace conflict
