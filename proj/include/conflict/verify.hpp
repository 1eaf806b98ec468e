#pragma once

// Replays the worked examples and stated results the library reproduces and
// reports each comparison with both sides.

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "conflict/inequality.hpp"

namespace conflict {

enum class CheckStatus { Pass, Fail, Unverifiable, Info };

const char* to_string(CheckStatus status);

struct VerifyCheck {
  std::string suite;
  std::string name;
  std::string claim;
  double computed = 0.0;
  Relation relation = Relation::Equal;
  double expected = 0.0;
  double tolerance = 0.0;
  CheckStatus status = CheckStatus::Info;
};

struct VerifySummary {
  std::vector<VerifyCheck> checks;

  std::size_t count(CheckStatus status) const;
  bool ok() const { return count(CheckStatus::Fail) == 0; }
};

const std::vector<std::string>& verify_suites();

/// Runs one suite, or every suite for "all". Failures are results, not
/// exceptions; an unknown name throws ValidationError listing the suites.
VerifySummary verify_suite(const std::string& name, std::uint64_t seed = 20240611);

nlohmann::json to_json(const VerifySummary& summary);

}  // namespace conflict
