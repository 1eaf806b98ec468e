// conflictsim: run scenarios, closed-form limits, depth sweeps, control
// strategies and the verification suites from the command line.
//
// Exit codes: 0 success, 1 invalid input or model failure, 2 a recomputed
// check did not hold.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "conflict/error.hpp"
#include "conflict/scenario.hpp"
#include "conflict/verify.hpp"

namespace {

using nlohmann::json;

constexpr int kExitInvalid = 1;
constexpr int kExitCheckFailed = 2;

struct Common {
  std::string config;
  std::string scenario;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<long> max_iter;
  std::string format = "json";
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Scenario file (JSON)");
  cmd->add_option("--scenario", c.scenario, "Bundled scenario name");
  cmd->add_option("--out", c.out, "Directory for report and CSV artifacts");
  cmd->add_option("--seed", c.seed, "Seed for random matrices");
  cmd->add_option("--tol", c.tol, "Convergence tolerance for the iteration");
  cmd->add_option("--max-iter", c.max_iter, "Iteration cap");
  cmd->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
}

conflict::ScenarioConfig load(const Common& c) {
  if (c.config.empty() == c.scenario.empty()) {
    throw conflict::ValidationError("give exactly one of --config or --scenario");
  }
  json document;
  if (!c.config.empty()) {
    std::ifstream in(c.config);
    if (!in) throw conflict::ValidationError("cannot open config " + c.config);
    try {
      document = json::parse(in);
    } catch (const json::parse_error& e) {
      throw conflict::ValidationError("config " + c.config + " is not valid JSON: " + e.what());
    }
  } else {
    document = conflict::builtin_scenario_json(c.scenario);
  }
  if (document.is_object()) {
    if (c.seed) document["seed"] = *c.seed;
    if (c.tol) document["dynamics"]["tol"] = *c.tol;
    if (c.max_iter) document["dynamics"]["max_iter"] = *c.max_iter;
  }
  return conflict::parse_scenario(document);
}

conflict::RunOptions options_for(const Common& c, conflict::RunStages stages) {
  conflict::RunOptions options;
  options.stages = stages;
  if (!c.out.empty()) options.out_dir = std::filesystem::path(c.out);
  return options;
}

int finish(const conflict::RunReport& report) {
  if (report.clamp_events > 0) {
    std::cerr << "warning: " << report.clamp_events
              << " cell updates were clamped from rounding-level negatives\n";
  }
  if (!report.checks_hold) {
    std::cerr << "error: at least one recomputed check failed; see \"checks\" in the report\n";
    return kExitCheckFailed;
  }
  return 0;
}

int cmd_simulate(const Common& c) {
  const auto config = load(c);
  if (c.format == "csv") {
    const auto scheme = config.scheme();
    const auto trajectory =
        conflict::iterate(conflict::measure_from_matrix(config.mu.build(), scheme, config.level),
                          conflict::measure_from_matrix(config.nu.build(), scheme, config.level),
                          config.theta_at(config.level), config.dynamics);
    conflict::write_trajectory_csv(trajectory, std::cout);
    return trajectory.converged ? 0 : kExitCheckFailed;
  }
  const auto report = conflict::run_scenario(config, options_for(c, {true, true, false}));
  std::cout << report.dump();
  return finish(report);
}

int cmd_limit(const Common& c) {
  const auto config = load(c);
  const auto report = conflict::run_scenario(config, options_for(c, {true, false, false}));
  if (c.format == "csv") {
    const auto& level = report.body["levels"][0];
    std::cout << "cell,lambda,mu,nu,sign,mu_limit,nu_limit\n";
    std::cout.precision(17);
    if (level.contains("cell_detail")) {
      for (const auto& row : level["cell_detail"]) {
        std::cout << row["cell"].get<std::string>() << ',' << row["lambda"].get<double>() << ','
                  << row["mu"].get<double>() << ',' << row["nu"].get<double>() << ','
                  << row["sign"].get<std::string>() << ',' << row["mu_limit"].get<double>() << ','
                  << row["nu_limit"].get<double>() << '\n';
      }
    }
  } else {
    std::cout << report.dump();
  }
  return finish(report);
}

int cmd_sweep(const Common& c, std::optional<int> from, std::optional<int> to) {
  const auto config = load(c);
  const auto range = config.sweep.value_or(std::make_pair(config.level, config.level));
  const auto report = conflict::sweep_depths(config, from.value_or(range.first),
                                             to.value_or(range.second), options_for(c, {}));
  if (c.format == "csv") {
    std::cout << "level,D,lambda_plus,lambda_minus,lambda_zero,nu_support_lambda\n";
    std::cout.precision(17);
    for (const auto& level : report.body["levels"]) {
      const double support =
          level["limit"].is_null() ? 0.0 : level["limit"]["nu_support_lambda"].get<double>();
      std::cout << level["level"].get<int>() << ',' << level["D"].get<double>() << ','
                << level["lambda"]["plus"].get<double>() << ','
                << level["lambda"]["minus"].get<double>() << ','
                << level["lambda"]["zero"].get<double>() << ',' << support << '\n';
    }
  } else {
    std::cout << report.dump();
  }
  return finish(report);
}

int cmd_control(const Common& c) {
  const auto config = load(c);
  if (!config.control) {
    throw conflict::ValidationError("scenario '" + config.name + "' has no control block");
  }
  const auto report = conflict::run_scenario(config, options_for(c, {false, false, true}));
  std::cout << report.dump();
  return finish(report);
}

int cmd_verify(const std::string& suite, const std::string& format, std::uint64_t seed) {
  const auto summary = conflict::verify_suite(suite, seed);
  if (format == "json") {
    std::cout << conflict::to_json(summary).dump(2) << '\n';
  } else {
    std::cout.precision(12);
    for (const auto& check : summary.checks) {
      std::cout << conflict::to_string(check.status) << '\t' << check.suite << '\t' << check.name
                << '\t' << check.computed << ' ' << conflict::to_string(check.relation) << ' '
                << check.expected << "\t# " << check.claim << '\n';
    }
    std::cout << summary.count(conflict::CheckStatus::Pass) << " passed, "
              << summary.count(conflict::CheckStatus::Fail) << " failed, "
              << summary.count(conflict::CheckStatus::Unverifiable) << " unverifiable, "
              << summary.count(conflict::CheckStatus::Info) << " informational\n";
  }
  return summary.ok() ? 0 : kExitCheckFailed;
}

int cmd_distribution(const Common& c, const std::string& which, std::optional<int> level,
                     int points, bool limit) {
  const auto config = load(c);
  const auto measure =
      conflict::scenario_measure(config, which == "mu", level.value_or(config.level), limit);
  const auto samples = conflict::sample_distribution(measure, points);
  if (!c.out.empty()) {
    std::filesystem::create_directories(c.out);
    const auto path = std::filesystem::path(c.out) / config.output.distribution;
    std::ofstream out(path);
    if (!out) throw conflict::ValidationError("cannot write " + path.string());
    conflict::write_distribution_csv(samples, out);
  } else {
    conflict::write_distribution_csv(samples, std::cout);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-opponent conflict dynamics on n-adic partitions of [0, 1)"};
  app.require_subcommand(1);

  Common simulate_opts, limit_opts, sweep_opts, control_opts, dist_opts;
  auto* simulate = app.add_subcommand("simulate", "Iterate the conflict dynamics");
  add_common(simulate, simulate_opts);

  auto* limit = app.add_subcommand("limit", "Closed-form limit at the scenario level");
  add_common(limit, limit_opts);

  auto* sweep = app.add_subcommand("sweep", "Closed-form analysis over a range of depths");
  add_common(sweep, sweep_opts);
  std::optional<int> sweep_from, sweep_to;
  sweep->add_option("--from", sweep_from, "First level")->check(CLI::NonNegativeNumber);
  sweep->add_option("--to", sweep_to, "Last level")->check(CLI::NonNegativeNumber);

  auto* control = app.add_subcommand("control", "Run the scenario's control block");
  add_common(control, control_opts);

  auto* verify = app.add_subcommand("verify", "Replay the bundled verification suites");
  std::string suite = "all";
  std::string verify_format = "csv";
  std::uint64_t verify_seed = 20240611;
  verify->add_option("--suite", suite, "Suite name, or 'all'");
  verify->add_option("--format", verify_format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));
  verify->add_option("--seed", verify_seed, "Seed for the randomized checks");

  auto* dist = app.add_subcommand("emit-distribution", "Sample F(x) = m([0, x)) as CSV");
  add_common(dist, dist_opts);
  std::string which = "mu";
  std::optional<int> dist_level;
  int points = 257;
  bool dist_limit = false;
  dist->add_option("--which", which, "Opponent")->check(CLI::IsMember({"mu", "nu"}));
  dist->add_option("--level", dist_level, "Approximation level")->check(CLI::NonNegativeNumber);
  dist->add_option("--points", points, "Number of abscissae")->check(CLI::Range(2, 1'000'000));
  dist->add_flag("--limit", dist_limit, "Use the closed-form limit instead of the start");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*simulate) return cmd_simulate(simulate_opts);
    if (*limit) return cmd_limit(limit_opts);
    if (*sweep) return cmd_sweep(sweep_opts, sweep_from, sweep_to);
    if (*control) return cmd_control(control_opts);
    if (*verify) return cmd_verify(suite, verify_format, verify_seed);
    if (*dist) return cmd_distribution(dist_opts, which, dist_level, points, dist_limit);
  } catch (const conflict::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
  return kExitInvalid;
}
