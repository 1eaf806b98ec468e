#pragma once

#include <map>
#include <string>

namespace conflict::detail {

const std::map<std::string, std::string>& builtin_scenario_sources();

}  // namespace conflict::detail
