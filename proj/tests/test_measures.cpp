#include "doctest.h"

#include <tuple>

#include "conflict/error.hpp"
#include "conflict/measures.hpp"
#include "support.hpp"

using namespace conflict;
using testing::self_similar;

namespace {

LevelMeasure level1(const std::vector<double>& masses) {
  return LevelMeasure(PartitionScheme::uniform(static_cast<int>(masses.size())), 1, masses);
}

}  // namespace

TEST_CASE("stochastic vectors are validated") {
  CHECK_THROWS_AS(StochasticVector({0.5, 0.6}), ValidationError);
  CHECK_THROWS_AS(StochasticVector({1.2, -0.2}), ValidationError);
  CHECK_NOTHROW(StochasticVector({1.0, 0.0}));
}

TEST_CASE("structure matrices by kind") {
  const auto ss = self_similar({0.6, 0.4});
  CHECK(ss.kind() == StructureKind::SelfSimilar);
  CHECK(ss.row(5) == ss.row(1));

  const auto sim = testing::similar({{0.6, 0.4}, {0.1, 0.9}});
  CHECK(sim.row(7) == sim.row(2));

  const auto partial = StructureMatrix::partial({StochasticVector({0.6, 0.4})});
  CHECK(partial.defined_depth() == 1);
  CHECK_FALSE(partial.defines(2));
  CHECK_THROWS_AS(partial.row(2), ValidationError);
  const auto continued = partial.with_continuation(StochasticVector({0.5, 0.5}));
  CHECK(continued.kind() == StructureKind::Similar);
  CHECK(continued.row(3)[0] == 0.5);
  CHECK_THROWS_AS(StructureMatrix::similar({StochasticVector({0.5, 0.5}),
                                            StochasticVector({0.2, 0.3, 0.5})}),
                  ValidationError);
}

TEST_CASE("level masses are products along the address") {
  const auto binary = PartitionScheme::uniform(2);
  const auto uniform = measure_from_matrix(self_similar({0.5, 0.5}), binary, 3);
  for (double m : uniform.masses()) CHECK(m == 0.125);

  const auto m2 = measure_from_matrix(self_similar({0.6, 0.4}), binary, 2);
  const std::vector<double> expected{0.36, 0.24, 0.24, 0.16};
  CHECK(testing::sup_diff(expected, m2.masses()) <= 1e-15);

  const auto degenerate = measure_from_matrix(self_similar({1.0, 0.0}), binary, 2);
  CHECK(std::vector<double>(degenerate.masses().begin(), degenerate.masses().end()) ==
        std::vector<double>{1.0, 0.0, 0.0, 0.0});
}

TEST_CASE("partial matrices need a continuation row") {
  const auto partial = StructureMatrix::partial({StochasticVector({0.6, 0.4})});
  CHECK_THROWS_WITH_AS(measure_from_matrix(partial, PartitionScheme::uniform(2), 2),
                       doctest::Contains("level 2"), ValidationError);
}

TEST_CASE("refinement splits each cell by the row") {
  const auto m = level1({0.3, 0.7});
  const auto r = refine(m, StochasticVector({0.5, 0.5}));
  const std::vector<double> expected{0.15, 0.15, 0.35, 0.35};
  CHECK(testing::sup_diff(expected, r.masses()) == 0.0);

  const auto unit = refine(m, StochasticVector({1.0, 0.0}));
  CHECK(unit[0] == 0.3);
  CHECK(unit[1] == 0.0);
  CHECK(unit[2] == 0.7);
  CHECK(unit[3] == 0.0);
  CHECK(unit.mass(CellAddress{2}) == 0.7);
}

TEST_CASE("density is mass over length") {
  const auto binary = PartitionScheme::uniform(2);
  const auto uniform = measure_from_matrix(self_similar({0.5, 0.5}), binary, 3);
  for (const auto& cell : binary.cells_at_level(3)) CHECK(density(uniform, cell) == doctest::Approx(1.0));
  const auto left = measure_from_matrix(self_similar({1.0, 0.0}), binary, 1);
  CHECK(density(left, CellAddress{1}) == 2.0);
  CHECK(density(left, CellAddress{2}) == 0.0);
}

TEST_CASE("distribution function") {
  const auto binary = PartitionScheme::uniform(2);
  const auto uniform = measure_from_matrix(self_similar({0.5, 0.5}), binary, 3);
  for (double x : {0.0, 0.1, 0.3, 0.5, 0.77, 1.0}) {
    CHECK(distribution_function(uniform, x) == doctest::Approx(x).epsilon(1e-14));
  }
  const auto left = measure_from_matrix(self_similar({1.0, 0.0}), binary, 3);
  CHECK(distribution_function(left, 0.0625) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(distribution_function(left, 1.0) == 1.0);
  CHECK_THROWS_AS(distribution_function(left, 1.5), ValidationError);

  const auto samples = sample_distribution(uniform, 5);
  REQUIRE(samples.size() == 5);
  CHECK(samples.front().first == 0.0);
  CHECK(samples.back().second == 1.0);
}

TEST_CASE("variation distance") {
  const auto p = level1({0.5, 0.5});
  CHECK(variation_distance(p, p) == 0.0);
  CHECK(variation_distance(level1({1.0, 0.0}), level1({0.0, 1.0})) == 1.0);
  const auto u = level1({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto r = level1({2.0 / 3, 1.0 / 6, 1.0 / 6});
  CHECK(variation_distance(u, r) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_THROWS_AS(variation_distance(p, u), ValidationError);
}

TEST_CASE("signed split of mu - nu") {
  const auto d = hahn_jordan(level1({0.5, 0.5}), level1({0.2, 0.8}));
  CHECK(d.plus == std::vector<std::size_t>{0});
  CHECK(d.minus == std::vector<std::size_t>{1});
  CHECK(d.total_difference == doctest::Approx(0.3));

  const auto same = hahn_jordan(level1({0.5, 0.5}), level1({0.5, 0.5}));
  CHECK(same.identical());
  CHECK(same.zero.size() == 2);
  CHECK(same.total_difference == 0.0);

  // Uniform against (3/4, 1/12, 1/12, 1/12) with the heavy index first.
  const auto four = hahn_jordan(level1({0.25, 0.25, 0.25, 0.25}),
                                level1({0.75, 1.0 / 12, 1.0 / 12, 1.0 / 12}));
  CHECK(four.minus == std::vector<std::size_t>{0});
  CHECK(four.plus == std::vector<std::size_t>{1, 2, 3});
  CHECK(four.total_difference == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("closed-form limit") {
  auto [mu, nu] = limit_state_closed_form(level1({0.5, 0.5}), level1({0.2, 0.8}));
  CHECK(mu[0] == 1.0);
  CHECK(mu[1] == 0.0);
  CHECK(nu[0] == 0.0);
  CHECK(nu[1] == 1.0);

  std::tie(mu, nu) = limit_state_closed_form(level1({1.0 / 3, 1.0 / 3, 1.0 / 3}),
                                             level1({2.0 / 3, 1.0 / 6, 1.0 / 6}));
  CHECK(mu[0] == 0.0);
  CHECK(mu[1] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(mu[2] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(nu[0] == 1.0);

  CHECK_THROWS_AS(limit_state_closed_form(level1({0.5, 0.5}), level1({0.5, 0.5})),
                  ValidationError);
}

TEST_CASE("tied cells get nothing in the limit") {
  const auto scheme = PartitionScheme::uniform(3);
  const auto P = self_similar({1.0 / 3, 1.0 / 3, 1.0 / 3});
  const auto R = self_similar({2.0 / 3, 1.0 / 6, 1.0 / 6});
  const auto mu = measure_from_matrix(P, scheme, 2);
  const auto nu = measure_from_matrix(R, scheme, 2);
  const auto d = hahn_jordan(mu, nu);
  CHECK(d.zero.size() == 4);
  const auto limits = limit_masses(d);
  for (std::size_t c : d.zero) {
    CHECK(limits.mu[c] == 0.0);
    CHECK(limits.nu[c] == 0.0);
  }
}

TEST_CASE("property: matrix realization matches repeated refinement and the oracle") {
  testing::Gen gen(21);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = gen.integer(2, 5);
    const auto rows = gen.rows(n, gen.integer(1, 3));
    const auto scheme = PartitionScheme::uniform(n);
    const auto matrix = testing::similar(rows);
    const int k = gen.integer(0, 5);
    const auto direct = measure_from_matrix(matrix, scheme, k);
    auto stepped = LevelMeasure::whole(scheme);
    for (int l = 1; l <= k; ++l) stepped = refine(stepped, matrix.row(l));
    CHECK(direct == stepped);
    CHECK(testing::sup_diff(testing::oracle_masses(rows, k), direct.masses()) <= 1e-15);
  }
}

TEST_CASE("property: split and limit invariants") {
  testing::Gen gen(22);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = gen.integer(2, 6);
    const auto p = gen.row(n);
    const auto r = gen.row(n);
    const auto d = hahn_jordan(p, r);
    double plus = 0.0, minus = 0.0;
    for (std::size_t c : d.plus) plus += d.differences[c];
    for (std::size_t c : d.minus) minus -= d.differences[c];
    CHECK(std::abs(plus - minus) <= 1e-12);
    CHECK(std::abs(d.total_difference - testing::half_l1(p, r)) <= 1e-12);

    const auto limits = limit_masses(p, r);
    const auto oracle = testing::oracle_limit(p, r);
    CHECK(testing::sup_diff(oracle.mu, limits.mu) <= 1e-15);
    CHECK(testing::sup_diff(oracle.nu, limits.nu) <= 1e-15);
    double sum_mu = 0.0, sum_nu = 0.0, overlap = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      sum_mu += limits.mu[i];
      sum_nu += limits.nu[i];
      overlap += limits.mu[i] * limits.nu[i];
    }
    CHECK(std::abs(sum_mu - 1.0) <= 1e-12);
    CHECK(std::abs(sum_nu - 1.0) <= 1e-12);
    CHECK(overlap == 0.0);
  }
}

TEST_CASE("property: distribution functions are monotone and bounded by density") {
  testing::Gen gen(23);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = gen.integer(2, 4);
    const PartitionScheme scheme(n, {gen.row(n)}, true);
    const int k = gen.integer(1, 4);
    const auto m = measure_from_matrix(testing::self_similar(gen.row(n)), scheme, k);
    double max_density = 0.0;
    for (const auto& cell : scheme.cells_at_level(k)) max_density = std::max(max_density, density(m, cell));
    const auto samples = sample_distribution(m, 101);
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const double dx = samples[i].first - samples[i - 1].first;
      const double dF = samples[i].second - samples[i - 1].second;
      CHECK(dF >= -1e-15);
      CHECK(dF <= max_density * dx + 1e-12);
    }
    CHECK(distribution_function(m, 1.0) == 1.0);
  }
}
