// devlab command-line front end: simulate | enumerate | calibrate.

#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "devlab/config.hpp"
#include "devlab/devlab.hpp"

namespace fs = std::filesystem;
using namespace devlab;

namespace {

enum ExitCode : int { kOk = 0, kAssertionFailed = 1, kConfigError = 2, kResourceError = 3 };

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> trials;
  std::optional<std::int64_t> horizon;
  std::optional<unsigned> threads;
  std::string out = ".";
};

std::optional<unsigned> env_threads() {
  const char* v = std::getenv("DEVLAB_THREADS");
  if (!v || !*v) return std::nullopt;
  try {
    const long n = std::stol(v);
    if (n < 1) throw ConfigError("DEVLAB_THREADS must be >= 1");
    return static_cast<unsigned>(n);
  } catch (const std::logic_error&) {
    throw ConfigError(std::string("DEVLAB_THREADS is not an integer: '") + v + "'");
  }
}

std::vector<DocumentEntry> load(const Overrides& o) {
  auto entries = load_document(o.config);
  const auto env = env_threads();
  for (auto& d : entries) {
    auto& e = d.experiment;
    if (o.seed) e.seed = d.calibration.seed = *o.seed;
    if (o.trials) {
      if (*o.trials < 1) throw ConfigError("--trials must be >= 1");
      e.trials = d.calibration.trials = static_cast<std::size_t>(*o.trials);
    }
    if (o.horizon) {
      if (*o.horizon < 1) throw ConfigError("--horizon must be >= 1");
      e.horizon = d.calibration.horizon = static_cast<std::size_t>(*o.horizon);
    }
    if (o.threads) {
      e.threads = d.calibration.threads = *o.threads;
    } else if (env) {
      e.threads = d.calibration.threads = *env;
    }
    if (e.threads < 1) throw ConfigError("--threads must be >= 1");
  }
  return entries;
}

std::ofstream open_out(const Overrides& o, const std::string& file) {
  std::error_code ec;
  fs::create_directories(o.out, ec);
  const fs::path p = fs::path(o.out) / file;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  return f;
}

/// Logs one line each time another tenth of the work completes.
ProgressFn decile_logger(const std::string& label) {
  auto last = std::make_shared<std::size_t>(0);
  return [label, last](std::size_t done, std::size_t total) {
    const std::size_t decile = total == 0 ? 10 : done * 10 / total;
    if (decile > *last) {
      *last = decile;
      std::cerr << "[" << label << "] " << decile * 10 << "% (" << done << "/" << total << ")\n";
    }
  };
}

int cmd_simulate(const Overrides& o) {
  const auto entries = load(o);
  for (const auto& d : entries) d.experiment.validate();
  auto jsonl = open_out(o, "simulate.jsonl");
  auto csv = open_out(o, "simulate.csv");
  csv << csv_header() << '\n';
  for (const auto& d : entries) {
    const auto& e = d.experiment;
    const std::string label = e.name.empty() ? "simulate" : e.name;
    const auto r = run_experiment(e, decile_logger(label));
    jsonl << report_to_json(r).dump() << '\n';
    csv << report_to_csv_row(r) << '\n';
    std::cerr << "[" << label << "] trials=" << r.trials << " missed=" << r.missed
              << " runtime_s=" << r.runtime_seconds << '\n';
  }
  return kOk;
}

int cmd_enumerate(const Overrides& o) {
  const auto entries = load(o);
  auto jsonl = open_out(o, "enumerate.jsonl");
  bool all = true;
  for (const auto& d : entries) {
    const auto& e = d.experiment;
    const GoalSpec goal = make_goal(e.goal);
    StrategyProfile hypothesis = goal.profile;
    try {
      hypothesis = apply_deviations(goal.profile, e.blame.hypothesis);
    } catch (const InputError& err) {
      throw ConfigError(std::string("blame.hypothesis: ") + err.what());
    }
    const auto report = verify_blame_bounds(goal, hypothesis, e.horizon, d.enumerate.budget);
    jsonl << bounds_report_to_json(e.name, report).dump() << '\n';
    const std::string label = e.name.empty() ? "enumerate" : e.name;
    std::cerr << "[" << label << "] P(miss)=" << report.p_star_miss
              << (report.all_hold() ? " all bounds hold" : " BOUND VIOLATED") << '\n';
    for (const auto& v : report.violations) std::cerr << "  counterexample: " << v << '\n';
    all = all && report.all_hold();
  }
  return all ? kOk : kAssertionFailed;
}

int cmd_calibrate(const Overrides& o) {
  const auto entries = load(o);
  if (entries.size() != 1) throw ConfigError("calibrate expects a single experiment");
  const auto& d = entries.front();
  if (d.experiment.goal.id != GoalId::RandomWalk) throw ConfigError("calibrate requires goal 'random_walk'");
  CalibrationResult res;
  try {
    res = calibrate_thresholds(d.calibration, decile_logger("calibrate"));
  } catch (const InputError& err) {
    throw ConfigError(err.what());
  }
  auto f = open_out(o, "thresholds.json");
  f << thresholds_fragment(res.thresholds).dump(2) << '\n';
  std::cerr << "[calibrate] episodes=" << res.episodes << " conditioned=" << res.conditioned
            << " theta1=" << res.thresholds.theta1 << " theta2=" << res.thresholds.theta2
            << " theta3=" << res.thresholds.theta3 << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"devlab: deviation-detection experiments"};
  app.require_subcommand(1);
  Overrides o;
  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment document (JSON)")->required();
    sub->add_option("--seed", o.seed, "Master seed");
    sub->add_option("--trials", o.trials, "Number of trials");
    sub->add_option("--horizon", o.horizon, "Horizon in periods");
    sub->add_option("--threads", o.threads, "Worker threads (default: DEVLAB_THREADS or config)");
    sub->add_option("--out", o.out, "Output directory");
  };
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo estimates of miss and blame probabilities");
  auto* enumerate = app.add_subcommand("enumerate", "Exact check of the likelihood-blame inequalities");
  auto* calibrate = app.add_subcommand("calibrate", "Calibrate random-walk surrogate thresholds");
  for (auto* s : {simulate, enumerate, calibrate}) add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (simulate->parsed()) return cmd_simulate(o);
    if (enumerate->parsed()) return cmd_enumerate(o);
    return cmd_calibrate(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CalibrationError& e) {
    std::cerr << "calibration error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InputError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kResourceError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kAssertionFailed;
  }
}
