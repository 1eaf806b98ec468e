#include "conflict/inequality.hpp"

#include <cmath>

namespace conflict {

const char* to_string(Relation relation) {
  switch (relation) {
    case Relation::Less: return "<";
    case Relation::LessEqual: return "<=";
    case Relation::Equal: return "==";
    case Relation::GreaterEqual: return ">=";
    case Relation::Greater: return ">";
  }
  return "?";
}

Inequality compare(std::string name, double lhs, Relation relation, double rhs, double tolerance) {
  bool holds = false;
  switch (relation) {
    case Relation::Less: holds = lhs < rhs; break;
    case Relation::LessEqual: holds = lhs <= rhs + tolerance; break;
    case Relation::Equal: holds = std::abs(lhs - rhs) <= tolerance; break;
    case Relation::GreaterEqual: holds = lhs >= rhs - tolerance; break;
    case Relation::Greater: holds = lhs > rhs; break;
  }
  return {std::move(name), lhs, relation, rhs, tolerance, holds};
}

}  // namespace conflict
