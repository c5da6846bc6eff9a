// Command-line front end for the softac shared library. Talks to the core
// exclusively through the C API in softac.h.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "softac.h"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) {
    std::cerr << "error: cannot write '" << path << "'\n";
    std::exit(1);
  }
  out << content;
}

int fail(softac_status status) {
  std::cerr << "error: " << softac_last_error() << " (status " << status << ")\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tabular off-policy actor-critic trainer and theory verifier"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd, bool config_required) {
    auto* opt = cmd->add_option("--config", config_path, "TOML config file");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory (default: stdout only)");
    cmd->add_option("--seed", seed, "override run.seed");
    cmd->add_option("--jobs", jobs, "parallel workers (verify-theory)");
  };

  CLI::App* solve = app.add_subcommand("solve", "solve an environment's soft-optimal policy");
  double solve_tau = 0.0;
  double solve_tol = 1e-10;
  int solve_max_iter = 1000000;
  add_common(solve, true);
  solve->add_option("--tau", solve_tau, "entropy coefficient");
  solve->add_option("--tol", solve_tol, "value-iteration tolerance");
  solve->add_option("--max-iterations", solve_max_iter, "iteration cap");

  CLI::App* train = app.add_subcommand("train", "run a training config");
  add_common(train, true);

  CLI::App* verify = app.add_subcommand("verify-theory", "run the verification grid");
  add_common(verify, false);

  CLI::App* dump = app.add_subcommand("dump-mdp", "export the config's environment as JSON");
  add_common(dump, true);

  CLI11_PARSE(app, argc, argv);

  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);

  if (solve->parsed() || dump->parsed()) {
    const std::string config = read_file(config_path);
    softac_mdp* mdp = nullptr;
    const std::uint64_t env_seed = seed >= 0 ? static_cast<std::uint64_t>(seed) : 0;
    if (auto st = softac_mdp_from_config(config.c_str(), env_seed, &mdp); st != SOFTAC_OK)
      return fail(st);

    if (dump->parsed()) {
      char* json = nullptr;
      if (auto st = softac_mdp_to_json(mdp, &json); st != SOFTAC_OK) {
        softac_mdp_free(mdp);
        return fail(st);
      }
      if (out_dir.empty())
        std::cout << json << "\n";
      else
        write_file(out_dir + "/mdp.json", json);
      softac_string_free(json);
    } else {
      char* json = nullptr;
      if (auto st = softac_solve(mdp, solve_tau, solve_tol, solve_max_iter, &json);
          st != SOFTAC_OK) {
        softac_mdp_free(mdp);
        return fail(st);
      }
      if (out_dir.empty())
        std::cout << json << "\n";
      else
        write_file(out_dir + "/solution.json", json);
      softac_string_free(json);
    }
    softac_mdp_free(mdp);
    return 0;
  }

  if (train->parsed()) {
    const std::string config = read_file(config_path);
    softac_run_result* result = nullptr;
    if (auto st = softac_run(config.c_str(), seed, &result); st != SOFTAC_OK) return fail(st);
    const std::string run_id = softac_result_run_id(result);
    if (out_dir.empty()) {
      std::cout << softac_result_summary_json(result) << "\n";
    } else {
      write_file(out_dir + "/" + run_id + ".csv", softac_result_csv(result));
      write_file(out_dir + "/" + run_id + ".json", softac_result_summary_json(result));
      std::cout << "wrote " << out_dir << "/" << run_id << ".{csv,json}\n";
    }
    softac_result_free(result);
    return 0;
  }

  // verify-theory
  std::string config;
  if (!config_path.empty()) config = read_file(config_path);
  softac_report* report = nullptr;
  if (auto st = softac_verify_theory(config.empty() ? nullptr : config.c_str(), jobs, &report);
      st != SOFTAC_OK)
    return fail(st);
  const int failed = softac_report_num_failed(report);
  if (out_dir.empty()) {
    std::cout << softac_report_json(report) << "\n";
  } else {
    write_file(out_dir + "/report.json", softac_report_json(report));
    write_file(out_dir + "/rates.csv", softac_report_rates_csv(report));
    std::cout << "wrote " << out_dir << "/report.json and rates.csv\n";
  }
  std::cout << softac_report_num_checks(report) << " checks, " << failed << " failed\n";
  softac_report_free(report);
  return failed == 0 ? 0 : 1;
}
