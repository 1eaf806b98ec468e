#pragma once

// Generators and independent oracles shared by the test binaries. The
// oracles recompute quantities from first principles so they never call the
// library routine they check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "conflict/measures.hpp"

namespace testing {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  /// Strictly positive probability vector with entries at least `floor`
  /// before normalization.
  std::vector<double> row(int n, double floor = 0.02) {
    std::vector<double> out(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& x : out) total += (x = real(floor, 1.0));
    for (double& x : out) x /= total;
    return out;
  }

  std::vector<std::vector<double>> rows(int n, int count) {
    std::vector<std::vector<double>> out;
    for (int i = 0; i < count; ++i) out.push_back(row(n));
    return out;
  }

 private:
  std::mt19937_64 rng_;
};

inline conflict::StructureMatrix similar(const std::vector<std::vector<double>>& rows) {
  std::vector<conflict::StochasticVector> vs;
  for (const auto& r : rows) vs.emplace_back(r);
  return conflict::StructureMatrix::similar(std::move(vs));
}

inline conflict::StructureMatrix self_similar(const std::vector<double>& row) {
  return conflict::StructureMatrix::self_similar(conflict::StochasticVector(row));
}

/// Level-k masses by recursion over the first index: cell (i, rest) gets
/// rows[0][i] times the mass of `rest` under the shifted rows.
inline std::vector<double> oracle_masses(const std::vector<std::vector<double>>& rows, int k,
                                         int depth = 0) {
  if (k == 0) return {1.0};
  const auto& row = rows[std::min<std::size_t>(static_cast<std::size_t>(depth), rows.size() - 1)];
  const auto tail = oracle_masses(rows, k - 1, depth + 1);
  std::vector<double> out;
  for (double head : row) {
    for (double t : tail) out.push_back(head * t);
  }
  return out;
}

struct OracleLimit {
  std::vector<double> mu;
  std::vector<double> nu;
};

/// Positive part of p - r normalized for mu, negative part for nu, with
/// differences of at most `tie` treated as zero.
inline OracleLimit oracle_limit(const std::vector<double>& p, const std::vector<double>& r,
                                double tie = 1e-12) {
  OracleLimit out{std::vector<double>(p.size(), 0.0), std::vector<double>(p.size(), 0.0)};
  double plus = 0.0, minus = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - r[i];
    if (d > tie) plus += d;
    if (d < -tie) minus -= d;
  }
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - r[i];
    if (d > tie) out.mu[i] = d / plus;
    if (d < -tie) out.nu[i] = -d / minus;
  }
  return out;
}

inline double sup_diff(const std::vector<double>& a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double half_l1(const std::vector<double>& a, const std::vector<double>& b) {
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) total += std::abs(a[i] - b[i]);
  return total / 2.0;
}

}  // namespace testing
