#include "conflict/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string_view>

#include "builtin_scenarios.hpp"
#include "conflict/error.hpp"

namespace conflict {

using nlohmann::json;

namespace {

constexpr int kMaxLevel = 12;
constexpr std::size_t kDetailCells = 81;

void check_keys(const json& j, std::initializer_list<std::string_view> allowed,
                const std::string& where) {
  if (!j.is_object()) {
    throw ValidationError(where + " must be an object");
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw ValidationError("unknown key '" + it.key() + "' in " + where);
    }
  }
}

long get_integer(const json& j, const char* key, long fallback, long lo, long hi,
                 const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer()) {
    throw ValidationError(where + "." + key + " must be an integer");
  }
  const long value = v.get<long>();
  if (value < lo || value > hi) {
    throw ValidationError(where + "." + key + " = " + std::to_string(value) + " is outside [" +
                          std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return value;
}

double get_number(const json& j, const char* key, double fallback, double lo, double hi,
                  const std::string& where) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) {
    throw ValidationError(where + "." + key + " must be a number");
  }
  const double value = v.get<double>();
  if (!(value >= lo && value <= hi)) {
    std::ostringstream msg;
    msg << where << "." << key << " = " << value << " is outside [" << lo << ", " << hi << "]";
    throw ValidationError(msg.str());
  }
  return value;
}

std::string get_string(const json& j, const char* key, const std::string& fallback,
                       const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) {
    throw ValidationError(where + "." + key + " must be a string");
  }
  return j.at(key).get<std::string>();
}

bool get_bool(const json& j, const char* key, bool fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) {
    throw ValidationError(where + "." + key + " must be true or false");
  }
  return j.at(key).get<bool>();
}

std::vector<double> get_row(const json& v, const std::string& where) {
  if (!v.is_array()) {
    throw ValidationError(where + " must be an array of numbers");
  }
  std::vector<double> row;
  for (const auto& x : v) {
    if (!x.is_number()) {
      throw ValidationError(where + " must be an array of numbers");
    }
    row.push_back(x.get<double>());
  }
  return row;
}

std::vector<std::vector<double>> get_rows(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) {
    throw ValidationError(where + " must be a non-empty array of rows");
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < v.size(); ++i) {
    rows.push_back(get_row(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return rows;
}

std::vector<double> random_row(std::mt19937_64& rng, int n) {
  std::exponential_distribution<double> draw(1.0);
  std::vector<double> row(static_cast<std::size_t>(n));
  double total = 0.0;
  for (double& x : row) {
    x = draw(rng) + 1e-3;
    total += x;
  }
  for (double& x : row) x /= total;
  return row;
}

MatrixSpec parse_matrix(const json& j, const std::string& where, std::uint64_t seed,
                        std::uint64_t salt, json& echo) {
  check_keys(j, {"kind", "rows", "n", "levels"}, where);
  const std::string kind = get_string(j, "kind", "", where);
  MatrixSpec spec;
  if (kind == "random") {
    const int n = static_cast<int>(get_integer(j, "n", 0, 2, 64, where));
    if (n == 0) {
      throw ValidationError(where + ".n is required for random matrices");
    }
    const int levels = static_cast<int>(get_integer(j, "levels", 1, 1, kMaxLevel, where));
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ULL + salt);
    for (int l = 0; l < levels; ++l) spec.rows.push_back(random_row(rng, n));
    spec.kind = levels == 1 ? StructureKind::SelfSimilar : StructureKind::Similar;
    echo["resolved_rows"] = spec.rows;
  } else {
    if (j.contains("n") || j.contains("levels")) {
      throw ValidationError(where + ": 'n' and 'levels' only apply to random matrices");
    }
    if (!j.contains("rows")) {
      throw ValidationError(where + ".rows is required");
    }
    spec.rows = get_rows(j.at("rows"), where + ".rows");
    if (kind == "self-similar") {
      if (spec.rows.size() != 1) {
        throw ValidationError(where + ": a self-similar matrix has exactly one row");
      }
      spec.kind = StructureKind::SelfSimilar;
    } else if (kind == "similar") {
      spec.kind = StructureKind::Similar;
    } else if (kind == "partial") {
      spec.kind = StructureKind::Partial;
    } else {
      throw ValidationError(where + ".kind must be self-similar, similar, partial or random");
    }
  }
  spec.build();  // validates the rows
  return spec;
}

ControlConfig parse_control(const json& j) {
  const std::string where = "control";
  if (!j.is_object()) throw ValidationError("control must be an object");
  const std::string type = get_string(j, "type", "", where);
  ControlConfig control;
  auto target = [&] {
    if (!j.contains("target") || !j.at("target").is_array()) {
      throw ValidationError("control.target must be an array of 1-based indices");
    }
    std::vector<int> indices;
    for (const auto& v : j.at("target")) {
      if (!v.is_number_integer()) {
        throw ValidationError("control.target must be an array of 1-based indices");
      }
      indices.push_back(v.get<int>());
    }
    return indices;
  };
  if (type == "reclaim") {
    check_keys(j, {"type", "target", "fractions"}, where);
    control.type = ControlConfig::Type::Reclaim;
    control.target = target();
    if (j.contains("fractions")) {
      control.fractions = get_row(j.at("fractions"), "control.fractions");
      for (double f : control.fractions) {
        if (!(f > 0.0 && f <= 1.0)) {
          throw ValidationError("control.fractions must lie in (0, 1]");
        }
      }
    }
  } else if (type == "reversal") {
    check_keys(j, {"type", "s", "k_max"}, where);
    control.type = ControlConfig::Type::Reversal;
    control.s = static_cast<int>(get_integer(j, "s", 1, 1, 64, where));
    control.k_max = static_cast<int>(get_integer(j, "k_max", 8, 1, 10, where));
  } else if (type == "strategy") {
    check_keys(j, {"type", "epsilon"}, where);
    control.type = ControlConfig::Type::Strategy;
    if (!j.contains("epsilon")) throw ValidationError("control.epsilon is required");
    control.epsilon = get_number(j, "epsilon", 0.1, 0.0, 1.0, where);
  } else if (type == "redistribute") {
    check_keys(j, {"type", "target", "masses"}, where);
    control.type = ControlConfig::Type::Redistribute;
    control.target = target();
    if (!j.contains("masses")) throw ValidationError("control.masses is required");
    control.masses = get_row(j.at("masses"), "control.masses");
  } else if (type == "distance-monotone") {
    check_keys(j, {"type", "k_max"}, where);
    control.type = ControlConfig::Type::DistanceMonotone;
    control.k_max = static_cast<int>(get_integer(j, "k_max", 8, 1, kMaxLevel, where));
  } else {
    throw ValidationError(
        "control.type must be reclaim, reversal, strategy, redistribute or distance-monotone");
  }
  return control;
}

}  // namespace

StructureMatrix MatrixSpec::build() const {
  std::vector<StochasticVector> vectors;
  for (const auto& row : rows) {
    for (double x : row) {
      if (!std::isfinite(x) || x < 0.0) {
        throw ValidationError("matrix rows must be non-negative");
      }
    }
    vectors.emplace_back(row);
  }
  switch (kind) {
    case StructureKind::SelfSimilar: return StructureMatrix::self_similar(vectors.front());
    case StructureKind::Similar: return StructureMatrix::similar(std::move(vectors));
    case StructureKind::Partial: return StructureMatrix::partial(std::move(vectors));
  }
  throw ValidationError("unknown matrix kind");
}

const char* to_string(ControlConfig::Type type) {
  switch (type) {
    case ControlConfig::Type::Reclaim: return "reclaim";
    case ControlConfig::Type::Reversal: return "reversal";
    case ControlConfig::Type::Strategy: return "strategy";
    case ControlConfig::Type::Redistribute: return "redistribute";
    case ControlConfig::Type::DistanceMonotone: return "distance-monotone";
  }
  return "unknown";
}

PartitionScheme ScenarioConfig::scheme() const {
  if (ratios.empty()) return PartitionScheme::uniform(n);
  return PartitionScheme(n, ratios, repeat_last);
}

ThetaKind ScenarioConfig::theta_at(int at_level) const {
  if (kernel_values) {
    return ThetaKind::piecewise_constant_kernel(*kernel_values,
                                                scheme().lambdas_at_level(at_level));
  }
  return theta;
}

ScenarioConfig parse_scenario(const json& document) {
  check_keys(document,
             {"name", "description", "seed", "scheme", "mu", "nu", "level", "sweep", "theta",
              "dynamics", "control", "output"},
             "scenario");
  ScenarioConfig config;
  config.echo = document;
  config.name = get_string(document, "name", "scenario", "scenario");
  if (document.contains("seed")) {
    if (!document.at("seed").is_number_unsigned()) {
      throw ValidationError("scenario.seed must be a non-negative integer");
    }
    config.seed = document.at("seed").get<std::uint64_t>();
  }
  if (!document.contains("mu") || !document.contains("nu")) {
    throw ValidationError("scenario needs both 'mu' and 'nu'");
  }
  config.mu = parse_matrix(document.at("mu"), "mu", config.seed, 1, config.echo["mu"]);
  config.nu = parse_matrix(document.at("nu"), "nu", config.seed, 2, config.echo["nu"]);
  if (config.mu.build().branching() != config.nu.build().branching()) {
    throw ValidationError("mu and nu have different branching factors");
  }
  config.n = config.mu.build().branching();

  if (document.contains("scheme")) {
    const auto& s = document.at("scheme");
    check_keys(s, {"n", "ratios", "repeat_last"}, "scheme");
    const int n = static_cast<int>(get_integer(s, "n", config.n, 2, 64, "scheme"));
    if (n != config.n) {
      throw ValidationError("scheme.n = " + std::to_string(n) + " but the matrices have " +
                            std::to_string(config.n) + " columns");
    }
    if (s.contains("ratios")) {
      const auto& r = s.at("ratios");
      if (r.is_string()) {
        if (r.get<std::string>() != "uniform") {
          throw ValidationError("scheme.ratios must be \"uniform\" or an array of rows");
        }
      } else {
        config.ratios = get_rows(r, "scheme.ratios");
      }
    }
    config.repeat_last = get_bool(s, "repeat_last", true, "scheme");
    config.scheme();  // validates the rows
  }

  config.level = static_cast<int>(get_integer(document, "level", 1, 0, kMaxLevel, "scenario"));
  if (document.contains("sweep")) {
    const auto& s = document.at("sweep");
    check_keys(s, {"from", "to"}, "sweep");
    const int from = static_cast<int>(get_integer(s, "from", 1, 0, kMaxLevel, "sweep"));
    const int to = static_cast<int>(get_integer(s, "to", from, 0, kMaxLevel, "sweep"));
    if (to < from) throw ValidationError("sweep.to is below sweep.from");
    config.sweep = std::make_pair(from, to);
  }

  if (document.contains("theta")) {
    const auto& t = document.at("theta");
    const std::string kind = get_string(t, "kind", "bhattacharyya", "theta");
    if (kind == "inner-product") {
      check_keys(t, {"kind"}, "theta");
      config.theta = ThetaKind::inner_product();
    } else if (kind == "bhattacharyya") {
      check_keys(t, {"kind"}, "theta");
      config.theta = ThetaKind::bhattacharyya();
    } else if (kind == "kernel") {
      check_keys(t, {"kind", "matrix"}, "theta");
      if (!t.contains("matrix")) throw ValidationError("theta.matrix is required");
      config.theta = ThetaKind::kernel(get_rows(t.at("matrix"), "theta.matrix"));
    } else if (kind == "piecewise-constant-kernel") {
      check_keys(t, {"kind", "values"}, "theta");
      if (!t.contains("values")) throw ValidationError("theta.values is required");
      config.kernel_values = get_rows(t.at("values"), "theta.values");
    } else {
      throw ValidationError(
          "theta.kind must be inner-product, bhattacharyya, kernel or piecewise-constant-kernel");
    }
  }

  if (document.contains("dynamics")) {
    const auto& d = document.at("dynamics");
    check_keys(d, {"enabled", "tol", "max_iter", "record_every", "law", "null_cells", "sign_tol"},
               "dynamics");
    auto& o = config.dynamics;
    config.run_dynamics = get_bool(d, "enabled", true, "dynamics");
    o.tol = get_number(d, "tol", o.tol, 1e-16, 1.0, "dynamics");
    o.max_iter = get_integer(d, "max_iter", o.max_iter, 0, 10'000'000, "dynamics");
    o.record_every = get_integer(d, "record_every", o.record_every, 0, 10'000'000, "dynamics");
    o.sign_tol = get_number(d, "sign_tol", o.sign_tol, 0.0, 1e-6, "dynamics");
    const std::string law = get_string(d, "law", "occupation", "dynamics");
    if (law == "occupation") {
      o.law = UpdateLaw::Occupation;
    } else if (law == "legacy-product") {
      o.law = UpdateLaw::LegacyProduct;
    } else {
      throw ValidationError("dynamics.law must be occupation or legacy-product");
    }
    const std::string nulls = get_string(d, "null_cells", "join-positive", "dynamics");
    if (nulls == "join-positive") {
      o.null_cells = NullCellPolicy::JoinPositive;
    } else if (nulls == "excluded") {
      o.null_cells = NullCellPolicy::Excluded;
    } else {
      throw ValidationError("dynamics.null_cells must be join-positive or excluded");
    }
  }

  if (document.contains("control")) config.control = parse_control(document.at("control"));

  if (document.contains("output")) {
    const auto& o = document.at("output");
    check_keys(o, {"report", "trajectory", "distribution"}, "output");
    config.output.report = get_string(o, "report", config.output.report, "output");
    config.output.trajectory = get_string(o, "trajectory", config.output.trajectory, "output");
    config.output.distribution =
        get_string(o, "distribution", config.output.distribution, "output");
  }
  return config;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open config " + path.string());
  }
  json document;
  try {
    document = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_scenario(document);
}

std::vector<std::string> builtin_scenarios() {
  std::vector<std::string> names;
  for (const auto& [name, source] : detail::builtin_scenario_sources()) names.push_back(name);
  return names;
}

json builtin_scenario_json(const std::string& name) {
  const auto& sources = detail::builtin_scenario_sources();
  const auto it = sources.find(name);
  if (it == sources.end()) {
    std::string known;
    for (const auto& [key, source] : sources) known += (known.empty() ? "" : ", ") + key;
    throw ValidationError("unknown scenario '" + name + "'; available: " + known);
  }
  return json::parse(it->second);
}

json to_json(const Inequality& check) {
  return {{"name", check.name},     {"lhs", check.lhs},
          {"relation", to_string(check.relation)}, {"rhs", check.rhs},
          {"tolerance", check.tolerance}, {"holds", check.holds}};
}

std::string RunReport::dump(bool include_wall_time) const {
  json out = body;
  if (include_wall_time) out["wall_time_seconds"] = wall_time;
  return out.dump(2) + "\n";
}

void write_trajectory_csv(const Trajectory& trajectory, std::ostream& out) {
  out.precision(17);
  const std::size_t cells = trajectory.states.front().mu.size();
  out << "step,theta,W,z,residual";
  for (std::size_t a = 1; a <= cells; ++a) out << ",mu_" << a;
  for (std::size_t a = 1; a <= cells; ++a) out << ",nu_" << a;
  out << '\n';
  for (const auto& state : trajectory.states) {
    out << state.step << ',' << state.theta << ',' << state.W << ',' << state.z << ','
        << state.residual;
    for (double m : state.mu.masses()) out << ',' << m;
    for (double m : state.nu.masses()) out << ',' << m;
    out << '\n';
  }
}

void write_distribution_csv(const std::vector<std::pair<double, double>>& samples,
                            std::ostream& out) {
  out.precision(17);
  out << "x,F\n";
  for (const auto& [x, f] : samples) out << x << ',' << f << '\n';
}

LevelMeasure scenario_measure(const ScenarioConfig& config, bool of_mu, int level, bool limit) {
  const auto scheme = config.scheme();
  auto mu = measure_from_matrix(config.mu.build(), scheme, level);
  auto nu = measure_from_matrix(config.nu.build(), scheme, level);
  if (!limit) return of_mu ? mu : nu;
  auto limits = limit_state_closed_form(mu, nu, config.dynamics.sign_tol);
  return of_mu ? limits.first : limits.second;
}

namespace {

const char* sign_name(CellSign sign) {
  switch (sign) {
    case CellSign::Plus: return "+";
    case CellSign::Minus: return "-";
    case CellSign::Zero: return "0";
  }
  return "?";
}

// Collects every asserted comparison so the report's verdict is the
// conjunction of what it prints.
class Checks {
 public:
  json add(Inequality check) {
    if (!check.holds) all_hold_ = false;
    return to_json(check);
  }
  json add_all(const std::vector<Inequality>& checks) {
    json out = json::array();
    for (const auto& c : checks) out.push_back(add(c));
    return out;
  }
  bool all_hold() const { return all_hold_; }

 private:
  bool all_hold_ = true;
};

json level_block(const ScenarioConfig& config, int level, Checks& checks) {
  const auto scheme = config.scheme();
  const auto mu = measure_from_matrix(config.mu.build(), scheme, level);
  const auto nu = measure_from_matrix(config.nu.build(), scheme, level);
  const auto decomposition = hahn_jordan(mu, nu, config.dynamics.sign_tol);
  const auto lambdas = scheme.lambdas_at_level(level);
  auto lambda_of = [&](const std::vector<std::size_t>& cells) {
    double total = 0.0;
    for (std::size_t c : cells) total += lambdas[c];
    return total;
  };

  json out;
  out["level"] = level;
  out["cells"] = mu.size();
  out["D"] = variation_distance(mu, nu);
  out["decomposition"] = {{"plus", decomposition.plus.size()},
                          {"minus", decomposition.minus.size()},
                          {"zero", decomposition.zero.size()}};
  out["lambda"] = {{"plus", lambda_of(decomposition.plus)},
                   {"minus", lambda_of(decomposition.minus)},
                   {"zero", lambda_of(decomposition.zero)}};
  out["fixed_point"] = to_string(classify_fixed_point(mu, nu, 1e-12));
  json list = json::array();
  if (decomposition.identical()) {
    out["limit"] = nullptr;
    out["checks"] = list;
    return out;
  }
  const auto limits = limit_masses(decomposition);
  double mu_sum = 0.0, nu_sum = 0.0, mu_support = 0.0, nu_support = 0.0, gap_lambda = 0.0;
  std::size_t gaps = 0;
  for (std::size_t c = 0; c < mu.size(); ++c) {
    mu_sum += limits.mu[c];
    nu_sum += limits.nu[c];
    if (limits.mu[c] > 0.0) mu_support += lambdas[c];
    if (limits.nu[c] > 0.0) nu_support += lambdas[c];
    if (limits.mu[c] == 0.0 && limits.nu[c] == 0.0) {
      ++gaps;
      gap_lambda += lambdas[c];
    }
  }
  const std::string prefix = "level " + std::to_string(level) + ": ";
  list.push_back(checks.add(compare(prefix + "mu limit is a probability vector", mu_sum,
                                    Relation::Equal, 1.0, 1e-12)));
  list.push_back(checks.add(compare(prefix + "nu limit is a probability vector", nu_sum,
                                    Relation::Equal, 1.0, 1e-12)));
  out["limit"] = {{"mu_support_lambda", mu_support},
                  {"nu_support_lambda", nu_support},
                  {"gap_cells", gaps},
                  {"gap_lambda", gap_lambda}};
  if (mu.size() <= kDetailCells) {
    json cells = json::array();
    for (std::size_t c = 0; c < mu.size(); ++c) {
      cells.push_back({{"cell", address_at(c, scheme.branching(), level).to_string()},
                       {"lambda", lambdas[c]},
                       {"mu", mu[c]},
                       {"nu", nu[c]},
                       {"sign", sign_name(decomposition.signs[c])},
                       {"mu_limit", limits.mu[c]},
                       {"nu_limit", limits.nu[c]}});
    }
    out["cell_detail"] = cells;
  }
  out["checks"] = list;
  return out;
}

const char* law_name(UpdateLaw law) {
  return law == UpdateLaw::Occupation ? "occupation" : "legacy-product";
}

const char* null_name(NullCellPolicy policy) {
  return policy == NullCellPolicy::JoinPositive ? "join-positive" : "excluded";
}

json dynamics_block(const ScenarioConfig& config, const RunOptions& options, Checks& checks,
                    long& clamps) {
  const auto scheme = config.scheme();
  auto mu = measure_from_matrix(config.mu.build(), scheme, config.level);
  auto nu = measure_from_matrix(config.nu.build(), scheme, config.level);
  const auto kind = config.theta_at(config.level);
  const auto trajectory = iterate(std::move(mu), std::move(nu), kind, config.dynamics);
  clamps += trajectory.clamp_events;

  double worst_sum = 0.0;
  double least_mass = 1.0;
  for (const auto& state : trajectory.states) {
    for (const auto* m : {&state.mu, &state.nu}) {
      double total = 0.0;
      for (double x : m->masses()) {
        total += x;
        least_mass = std::min(least_mass, x);
      }
      worst_sum = std::max(worst_sum, std::abs(total - 1.0));
    }
  }

  json out;
  out["theta"] = kind.name();
  out["law"] = law_name(config.dynamics.law);
  out["null_cells"] = null_name(config.dynamics.null_cells);
  out["iterations"] = trajectory.iterations;
  out["converged"] = trajectory.converged;
  out["residual"] = trajectory.residual;
  out["clamp_events"] = trajectory.clamp_events;
  out["recorded_states"] = trajectory.states.size();
  out["distance_to_closed_form"] =
      trajectory.distance_to_closed_form ? json(*trajectory.distance_to_closed_form) : json();
  const auto separation = check_monotone_separation(trajectory);
  out["separation"] = {{"monotone", separation.monotone},
                       {"first_violation", separation.first_violation
                                               ? json(*separation.first_violation)
                                               : json()},
                       {"worst_gap", separation.worst_gap}};
  const auto& last = trajectory.final_state();
  if (last.mu.size() <= kDetailCells) {
    out["final_mu"] = std::vector<double>(last.mu.masses().begin(), last.mu.masses().end());
    out["final_nu"] = std::vector<double>(last.nu.masses().begin(), last.nu.masses().end());
  }

  json list = json::array();
  list.push_back(checks.add(compare("dynamics converged", trajectory.converged ? 1.0 : 0.0,
                                    Relation::Equal, 1.0)));
  list.push_back(checks.add(compare("recorded states sum to 1", worst_sum, Relation::LessEqual,
                                    0.0, 1e-10)));
  list.push_back(checks.add(compare("recorded states are non-negative", least_mass,
                                    Relation::GreaterEqual, 0.0)));
  const bool closed_form_applies = config.dynamics.law == UpdateLaw::Occupation &&
                                   config.dynamics.null_cells == NullCellPolicy::JoinPositive;
  if (closed_form_applies && trajectory.distance_to_closed_form) {
    list.push_back(checks.add(compare("iterate matches the closed-form limit",
                                      *trajectory.distance_to_closed_form, Relation::LessEqual,
                                      1e-6)));
  }
  out["checks"] = list;

  if (options.out_dir) {
    const auto path = *options.out_dir / config.output.trajectory;
    std::ofstream csv(path);
    if (!csv) throw ValidationError("cannot write " + path.string());
    write_trajectory_csv(trajectory, csv);
  }
  return out;
}

json reclaim_block(const ScenarioConfig& config, const ControlConfig& control, Checks& checks) {
  const auto scheme = config.scheme();
  const auto mu = measure_from_matrix(config.mu.build(), scheme, config.level);
  const auto nu = measure_from_matrix(config.nu.build(), scheme, config.level);
  const CellAddress target(control.target);
  const double bound = reclaim_bound(mu, nu, target);
  json out;
  out["target"] = target.to_string();
  out["bound"] = bound;
  out["target_lambda"] = scheme.cell_lambda(target);
  json plans = json::array();
  for (double fraction : control.fractions) {
    const auto plan = extremal_reclaim_plan(mu, nu, target, fraction * bound);
    const auto outcome = evaluate_reclaim(mu, nu, plan, config.dynamics.sign_tol);
    const auto r = outcome.reclaimed;
    std::ostringstream tag;
    tag << "fraction " << fraction << ": ";
    json entry = {{"fraction", fraction},
                  {"sub_lambda", outcome.division.lambda[r]},
                  {"degenerate", outcome.degenerate},
                  {"mu", outcome.division.mu[r]},
                  {"nu", outcome.division.nu[r]},
                  {"mu_limit", outcome.mu_limit},
                  {"nu_limit", outcome.nu_limit}};
    json list = json::array();
    if (outcome.degenerate) {
      list.push_back(checks.add(compare(tag.str() + "mu limit on the piece vanishes",
                                        outcome.mu_limit, Relation::Equal, 0.0, 1e-12)));
      list.push_back(checks.add(compare(tag.str() + "nu limit on the piece vanishes",
                                        outcome.nu_limit, Relation::Equal, 0.0, 1e-12)));
    } else {
      list.push_back(checks.add(compare(tag.str() + "mu exceeds nu on the piece",
                                        outcome.division.mu[r], Relation::Greater,
                                        outcome.division.nu[r])));
      list.push_back(checks.add(compare(tag.str() + "mu limit on the piece is positive",
                                        outcome.mu_limit, Relation::Greater, 0.0)));
      list.push_back(checks.add(compare(tag.str() + "nu limit on the piece vanishes",
                                        outcome.nu_limit, Relation::Equal, 0.0, 1e-12)));
    }
    entry["checks"] = list;
    plans.push_back(entry);
  }
  out["plans"] = plans;
  return out;
}

json reversal_block(const ScenarioConfig& config, const ControlConfig& control, Checks& checks) {
  const auto P = config.mu.build();
  const auto R = config.nu.build();
  const auto cell = find_reversal_cell(P, R, control.s);
  const auto& p = P.row(1);
  const auto& r = R.row(1);
  const auto s = static_cast<std::size_t>(control.s - 1);
  const auto m = static_cast<std::size_t>(cell.m - 1);
  auto chain = [&](const StochasticVector& row, int k) {
    return row[s] * std::pow(row[m], k - 1);
  };
  json out = {{"s", control.s}, {"m", cell.m}, {"depth", cell.depth},
              {"address", cell.address.to_string()}};
  json list = json::array();
  list.push_back(checks.add(compare("product inequality at the returned depth",
                                    chain(p, cell.depth), Relation::Greater,
                                    chain(r, cell.depth))));
  if (cell.depth > 1) {
    list.push_back(checks.add(compare("product inequality fails one level up",
                                      chain(p, cell.depth - 1), Relation::LessEqual,
                                      chain(r, cell.depth - 1))));
  }
  json masses = json::array();
  for (int k = 1; k <= control.k_max; ++k) {
    const auto bound = reversal_mass_bound(p, r, control.s, k);
    masses.push_back({{"depth", k}, {"mass", bound.mass}, {"bound", bound.bound}});
    list.push_back(checks.add(compare("depth " + std::to_string(k) + ": limit mass under s",
                                      bound.mass, Relation::LessEqual, bound.bound, 1e-12)));
  }
  out["limit_mass_under_s"] = masses;
  out["checks"] = list;
  return out;
}

json strategy_block(const ScenarioConfig& config, const ControlConfig& control, Checks& checks) {
  const auto result = occupation_strategy(config.mu.build(), config.nu.build(), control.epsilon,
                                          config.scheme(), config.dynamics.sign_tol);
  std::vector<std::vector<double>> rows;
  for (int l = 1; l <= result.depth; ++l) {
    const auto entries = result.perturbed.row(l).entries();
    rows.emplace_back(entries.begin(), entries.end());
  }
  json cells = json::array();
  for (std::size_t c = 0; c < result.division.size(); ++c) {
    cells.push_back({{"cell", result.division.labels[c]},
                     {"lambda", result.division.lambda[c]},
                     {"mu", result.division.mu[c]},
                     {"nu", result.division.nu[c]},
                     {"sign", sign_name(result.decomposition.signs[c])},
                     {"mu_limit", result.limits.mu[c]},
                     {"nu_limit", result.limits.nu[c]}});
  }
  return {{"epsilon", control.epsilon},
          {"depth", result.depth},
          {"losing_index", result.losing_index},
          {"delta", result.delta},
          {"level_deltas", result.level_deltas},
          {"generalized", result.generalized},
          {"perturbed_rows", rows},
          {"lambda", {{"plus", result.lambda_plus},
                      {"minus", result.lambda_minus},
                      {"zero", result.lambda_zero}}},
          {"division", cells},
          {"verified", result.verified},
          {"checks", checks.add_all(result.checks)}};
}

json redistribute_block(const ScenarioConfig& config, const ControlConfig& control,
                        Checks& checks) {
  const auto scheme = config.scheme();
  const auto mu = measure_from_matrix(config.mu.build(), scheme, config.level);
  const auto nu = measure_from_matrix(config.nu.build(), scheme, config.level);
  RedistributionPlan plan;
  plan.target = CellAddress(control.target);
  plan.replacement = CellMassReplacement{control.masses};
  const auto moved = redistribute(mu, plan);
  double outside = 0.0;
  for (std::size_t c = 0; c < mu.size(); ++c) {
    const auto address = address_at(c, scheme.branching(), config.level);
    if (!plan.target.is_prefix_of(address)) outside = std::max(outside, std::abs(moved[c] - mu[c]));
  }
  json list = json::array();
  list.push_back(checks.add(compare("mu unchanged outside the target", outside, Relation::Equal,
                                    0.0)));
  list.push_back(checks.add(compare("target mass conserved", moved.mass(plan.target),
                                    Relation::Equal, mu.mass(plan.target), 1e-12)));
  json out = {{"target", plan.target.to_string()},
              {"D_before", variation_distance(mu, nu)},
              {"D_after", variation_distance(moved, nu)}};
  if (!hahn_jordan(moved, nu).identical()) {
    const auto limits = limit_masses(moved.masses(), nu.masses(), config.dynamics.sign_tol);
    out["mu_limit_on_target"] = [&] {
      double total = 0.0;
      for (std::size_t c = 0; c < mu.size(); ++c) {
        if (plan.target.is_prefix_of(address_at(c, scheme.branching(), config.level))) {
          total += limits.mu[c];
        }
      }
      return total;
    }();
  }
  out["checks"] = list;
  return out;
}

json distance_block(const ScenarioConfig& config, const ControlConfig& control, Checks& checks) {
  const auto report = check_distance_monotone(config.mu.build(), config.nu.build(), control.k_max);
  json list = json::array();
  for (std::size_t i = 0; i + 1 < report.distances.size(); ++i) {
    list.push_back(checks.add(compare("D_" + std::to_string(i + 1) + " <= D_" +
                                          std::to_string(i + 2),
                                      report.distances[i], Relation::LessEqual,
                                      report.distances[i + 1], 1e-12)));
  }
  return {{"distances", report.distances}, {"monotone", report.monotone}, {"checks", list}};
}

json control_block(const ScenarioConfig& config, Checks& checks) {
  const auto& control = *config.control;
  json out;
  switch (control.type) {
    case ControlConfig::Type::Reclaim: out = reclaim_block(config, control, checks); break;
    case ControlConfig::Type::Reversal: out = reversal_block(config, control, checks); break;
    case ControlConfig::Type::Strategy: out = strategy_block(config, control, checks); break;
    case ControlConfig::Type::Redistribute:
      out = redistribute_block(config, control, checks);
      break;
    case ControlConfig::Type::DistanceMonotone:
      out = distance_block(config, control, checks);
      break;
  }
  out["type"] = to_string(control.type);
  return out;
}

template <typename Body>
RunReport with_context(const ScenarioConfig& config, const RunOptions& options, Body body) {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  Checks checks;
  try {
    report.body = body(checks, report.clamp_events);
  } catch (const ValidationError& e) {
    throw ValidationError("scenario '" + config.name + "': " + e.what());
  } catch (const ModelError& e) {
    throw ModelError("scenario '" + config.name + "': " + e.what());
  }
  report.body["schema_version"] = kReportSchemaVersion;
  report.body["scenario"] = config.echo;
  report.checks_hold = checks.all_hold();
  report.body["checks_hold"] = report.checks_hold;
  report.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    std::ofstream out(*options.out_dir / config.output.report);
    if (!out) throw ValidationError("cannot write report to " + options.out_dir->string());
    out << report.dump();
  }
  return report;
}

}  // namespace

RunReport run_scenario(const ScenarioConfig& config, const RunOptions& options) {
  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);
  return with_context(config, options, [&](Checks& checks, long& clamps) {
    json body = json::object();
    if (options.stages.limits) {
      body["levels"] = json::array({level_block(config, config.level, checks)});
    }
    if (options.stages.dynamics && config.run_dynamics) {
      body["dynamics"] = dynamics_block(config, options, checks, clamps);
    }
    if (options.stages.control && config.control) {
      body["control"] = control_block(config, checks);
    }
    return body;
  });
}

RunReport sweep_depths(const ScenarioConfig& config, int from, int to, const RunOptions& options) {
  if (from < 0 || to < from || to > kMaxLevel) {
    throw ValidationError("sweep range [" + std::to_string(from) + ", " + std::to_string(to) +
                          "] is invalid");
  }
  return with_context(config, options, [&](Checks& checks, long&) {
    json levels = json::array();
    std::vector<double> distances;
    std::vector<double> nu_support;
    std::vector<double> minus_lambda;
    for (int k = from; k <= to; ++k) {
      auto block = level_block(config, k, checks);
      distances.push_back(block["D"].get<double>());
      minus_lambda.push_back(block["lambda"]["minus"].get<double>());
      nu_support.push_back(block["limit"].is_null()
                               ? 0.0
                               : block["limit"]["nu_support_lambda"].get<double>());
      levels.push_back(std::move(block));
    }
    json list = json::array();
    for (std::size_t i = 0; i + 1 < distances.size(); ++i) {
      list.push_back(checks.add(compare("D_" + std::to_string(from + static_cast<int>(i)) +
                                            " <= D_" + std::to_string(from + static_cast<int>(i) + 1),
                                        distances[i], Relation::LessEqual, distances[i + 1],
                                        1e-12)));
    }
    return json{{"levels", levels},
                {"sweep",
                 {{"from", from},
                  {"to", to},
                  {"D", distances},
                  {"lambda_minus", minus_lambda},
                  {"nu_support_lambda", nu_support},
                  {"checks", list}}}};
  });
}

}  // namespace conflict
