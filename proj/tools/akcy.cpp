#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "akcy/cli/commands.hpp"

using namespace akcy;
using namespace akcy::cli;

namespace {

/// Data-parallel width from AKCY_THREADS, 0 when unset.
int thread_cap() {
  const char *v = std::getenv("AKCY_THREADS");
  if (!v || !*v) return 0;
  char *end = nullptr;
  const long n = std::strtol(v, &end, 10);
  if (*end != '\0' || n < 1 || n > 4096) throw ConfigError("AKCY_THREADS must be a positive integer, got '" + std::string(v) + "'");
  return int(n);
}

int finish(RunReport r, const std::string &output_dir, int threads) {
  r.extra["threads"] = threads > 0 ? threads : Eigen::nbThreads();
  try {
    write_report(r, output_dir);
  } catch (const std::exception &e) {
    std::cerr << "akcy: " << e.what() << "\n";
  }
  std::cout << r.to_json().dump(2) << "\n";
  if (!r.success())
    std::cerr << "akcy: " << r.command << " failed" << (r.failed_stage.empty() ? "" : " in stage " + r.failed_stage)
              << ": " << r.error << "\n";
  return r.exit_code;
}

/// A config that fails to load still yields a report, echoing defaults.
int config_failure(const std::string &command, const std::string &what) {
  RunReport r;
  r.command = command;
  r.config = nullptr;
  r.exit_code = exit_config_error;
  r.failed_stage = "load_config";
  r.error = what;
  std::cout << r.to_json().dump(2) << "\n";
  std::cerr << "akcy: " << what << "\n";
  return exit_config_error;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Almost-Kahler Calabi-Yau continuity solver"};
  app.require_subcommand(1);

  std::string config_path, dump_path, eps_list;
  double t = 1;
  bool geometry_only = false;

  auto *run_cmd = app.add_subcommand("run", "solve the continuity path for a configuration");
  run_cmd->add_option("config", config_path, "YAML configuration")->required();
  auto *check_cmd = app.add_subcommand("check", "run the property suites");
  check_cmd->add_option("config", config_path, "YAML configuration")->required();
  auto *diag_cmd = app.add_subcommand("diagnose", "recompute the diagnostics of a stored omega' field");
  diag_cmd->add_option("dump", dump_path, "field dump of omega'")->required();
  diag_cmd->add_option("config", config_path, "YAML configuration")->required();
  diag_cmd->add_option("--t", t, "path parameter the dump belongs to")->capture_default_str();
  auto *sweep_cmd = app.add_subcommand("sweep", "scan the Nijenhuis size epsilon");
  sweep_cmd->add_option("config", config_path, "YAML configuration")->required();
  sweep_cmd->add_option("--eps", eps_list, "comma-separated epsilon values")->required();
  sweep_cmd->add_flag("--geometry-only", geometry_only, "measure |N(J)| without solving");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_config_error;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  int threads = 0;
  RunConfig config;
  std::vector<double> eps;
  try {
    threads = thread_cap();
    if (threads > 0) Eigen::setNbThreads(threads);
    config = load_config(config_path);
    if (command == "sweep") {
      std::stringstream ss(eps_list);
      std::string item;
      while (std::getline(ss, item, ',')) {
        try {
          std::size_t used = 0;
          eps.push_back(std::stod(item, &used));
          if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception &) {
          throw ConfigError("cannot parse epsilon '" + item + "'");
        }
      }
    }
  } catch (const ConfigError &e) {
    return config_failure(command, e.what());
  }

  if (command == "run") return finish(run(config), config.output_dir, threads);
  if (command == "check") return finish(check(config), config.output_dir, threads);
  if (command == "diagnose") return finish(diagnose(dump_path, config, t), config.output_dir, threads);
  return finish(sweep(config, eps, !geometry_only), config.output_dir, threads);
}
