// bench.cpp - the `dflow` command-line tool.
//
//   dflow run <config> [overrides]          solve one configured problem
//   dflow sweep <config> --param K --values a;b;c [overrides]
//                                           re-run with K set to each value
//   dflow verify                            run the acceptance suite
//
// Exit codes: 0 success, 1 unexpected failure (or failed verification),
// 2 solver non-convergence, 3 invalid configuration.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dflow/config.hpp"
#include "dflow/runner.hpp"
#include "dflow/verify.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw dflow::ConfigError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Overrides {
  std::string formulation, model, out_dir;
  double theta = 0, tol = 0;
  int weight = 0, nele = 0, order = 0;
  bool has_formulation = false, has_model = false, has_out_dir = false, has_theta = false,
       has_tol = false, has_weight = false, has_nele = false, has_order = false;

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--formulation", formulation, "ls or vms")
        ->check(CLI::IsMember({"ls", "vms"}))
        ->each([this](const std::string&) { has_formulation = true; });
    cmd->add_option("--model", model, "drag model variant")
        ->check(CLI::IsMember({"darcy", "barus", "forchheimer", "barus_forchheimer"}))
        ->each([this](const std::string&) { has_model = true; });
    cmd->add_option("--theta", theta, "linearization selector in [0,1]")
        ->each([this](const std::string&) { has_theta = true; });
    cmd->add_option("--weight", weight, "LS weighting (1 or 2)")
        ->each([this](const std::string&) { has_weight = true; });
    cmd->add_option("--nele", nele, "total element count (square/cubic grids)")
        ->each([this](const std::string&) { has_nele = true; });
    cmd->add_option("--order", order, "element order (1 or 2, 2D problems)")
        ->each([this](const std::string&) { has_order = true; });
    cmd->add_option("--tol", tol, "nonlinear convergence tolerance")
        ->each([this](const std::string&) { has_tol = true; });
    cmd->add_option("--out-dir", out_dir, "artifact output directory")
        ->each([this](const std::string&) { has_out_dir = true; });
  }

  void apply(dflow::RunConfig& cfg) const {
    if (has_formulation) cfg.formulation = formulation;
    if (has_model) cfg.variant = model;
    if (has_theta) cfg.theta = theta;
    if (has_weight) cfg.weight = weight;
    if (has_tol) cfg.tol = tol;
    if (has_out_dir) cfg.out_dir = out_dir;
    if (has_nele) {
      const bool is3d = cfg.element == "B8";
      const double root = is3d ? std::cbrt(static_cast<double>(nele))
                               : std::sqrt(static_cast<double>(nele));
      cfg.nx = std::max(1, static_cast<int>(std::lround(root)));
      cfg.ny = 0;
      cfg.nz = 0;
    }
    if (has_order) {
      if (order == 1 && cfg.element == "Q9") cfg.element = "Q4";
      else if (order == 2 && (cfg.element == "Q4" || cfg.element == "T3")) cfg.element = "Q9";
      else if (order != 1 && order != 2)
        throw dflow::ConfigError("--order must be 1 or 2");
    }
  }
};

int report(const dflow::RunArtifacts& art) {
  std::printf("%s\n", art.message.c_str());
  for (const auto& f : art.files) std::printf("  wrote %s\n", f.c_str());
  return static_cast<int>(art.status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mixed finite element benchmarks for generalized Darcy flow"};
  app.require_subcommand(1);

  std::string run_config, sweep_config, sweep_param, sweep_values;
  Overrides run_over, sweep_over;

  CLI::App* cmd_run = app.add_subcommand("run", "solve one configured problem");
  cmd_run->add_option("config", run_config, "config file")->required();
  run_over.add_flags(cmd_run);

  CLI::App* cmd_sweep = app.add_subcommand("sweep", "re-run a config across parameter values");
  cmd_sweep->add_option("config", sweep_config, "config file")->required();
  cmd_sweep->add_option("--param", sweep_param, "config key, e.g. wells.p_enh")->required();
  cmd_sweep->add_option("--values", sweep_values, "semicolon-separated values")->required();
  sweep_over.add_flags(cmd_sweep);

  CLI::App* cmd_verify = app.add_subcommand("verify", "run the acceptance suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) {
      dflow::RunConfig cfg = dflow::parse_config(read_file(run_config));
      run_over.apply(cfg);
      return report(dflow::run(cfg));
    }
    if (cmd_sweep->parsed()) {
      dflow::RunConfig base = dflow::parse_config(read_file(sweep_config));
      sweep_over.apply(base);
      int worst = 0;
      for (const auto& value : dflow::detail::split(sweep_values, ';')) {
        if (value.empty()) continue;
        dflow::RunConfig cfg = base;
        dflow::set_config_key(cfg, sweep_param, value);
        cfg.out_dir = base.out_dir + "/" + sweep_param + "=" + value;
        std::printf("--- %s = %s ---\n", sweep_param.c_str(), value.c_str());
        worst = std::max(worst, report(dflow::run(cfg)));
      }
      return worst;
    }
    if (cmd_verify->parsed()) {
      bool all = true;
      for (const auto& r : dflow::verify::run_all()) {
        std::printf("[%s] %s: %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.detail.c_str());
        std::fflush(stdout);
        all = all && r.passed;
      }
      return all ? 0 : 1;
    }
  } catch (const dflow::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
