#pragma once

#include <string>

namespace conflict {

enum class Relation { Less, LessEqual, Equal, GreaterEqual, Greater };

const char* to_string(Relation relation);

/// A recomputed comparison together with both sides, for reports.
struct Inequality {
  std::string name;
  double lhs = 0.0;
  Relation relation = Relation::Equal;
  double rhs = 0.0;
  /// Slack for the non-strict relations and for Equal; strict ones ignore it.
  double tolerance = 0.0;
  bool holds = false;
};

Inequality compare(std::string name, double lhs, Relation relation, double rhs,
                   double tolerance = 0.0);

}  // namespace conflict
