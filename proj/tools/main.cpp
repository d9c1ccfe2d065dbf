#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "spcrl/config.hpp"
#include "spcrl/harness.hpp"
#include "spcrl/verify.hpp"

namespace {

int cmd_run(const std::map<std::string, std::string>& cli_kv,
            const std::string& config_path, const std::string& out_path) {
  const auto file_kv = config_path.empty()
                           ? std::map<std::string, std::string>{}
                           : spcrl::parse_config_file(config_path);
  const spcrl::ExperimentConfig cfg = spcrl::build_config(file_kv, cli_kv);
  spcrl::run_experiment_to_csv(cfg, out_path);
  std::printf("wrote %s (%s, %s, seed %llu, %d iterations)\n", out_path.c_str(),
              cfg.env.c_str(), cfg.curriculum.c_str(),
              static_cast<unsigned long long>(cfg.seed), cfg.iterations);
  return 0;
}

int cmd_aggregate(const std::vector<std::string>& inputs, const std::string& out_path) {
  const std::vector<spcrl::CurriculumSummary> rows = spcrl::aggregate(inputs);
  spcrl::write_aggregate_csv(out_path, rows);
  std::printf("%-10s %7s %9s %16s %18s %14s\n", "curriculum", "seeds", "final_it",
              "eval_return_mean", "eval_return_stderr", "p_vs_default");
  for (const auto& r : rows)
    std::printf("%-10s %7d %9d %16.4f %18.4f %14.4g\n", r.curriculum.c_str(),
                r.n_seeds, r.final_iteration, r.eval_return_mean,
                r.eval_return_stderr, r.p_vs_default);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int cmd_verify() {
  bool all_pass = true;
  for (const spcrl::VerifyCheck& c : spcrl::verify_inference()) {
    std::printf("%s %-38s worst %.3e  tol %.0e\n", c.pass ? "PASS" : "FAIL",
                c.name.c_str(), c.worst, c.tolerance);
    all_pass = all_pass && c.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-paced curriculum RL experiment runner"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Train one seed and write a per-iteration CSV");
  std::string env, curriculum, config_path, out_path;
  std::int64_t seed = 0;
  std::int64_t iterations = 0;
  auto* opt_env = run->add_option("--env", env, "pointmass2d|pointmass3d|gridchain");
  auto* opt_cur = run->add_option("--curriculum", curriculum, "spdl|sprl|random|default");
  auto* opt_seed = run->add_option("--seed", seed, "Master seed");
  auto* opt_iter = run->add_option("--iterations", iterations, "Training iterations");
  run->add_option("--config", config_path, "key=value config file")
      ->check(CLI::ExistingFile);
  run->add_option("--out", out_path, "Output CSV path")->required();

  auto* agg = app.add_subcommand("aggregate",
                                 "Summarize per-seed CSVs into a curriculum table");
  std::vector<std::string> inputs;
  std::string agg_out;
  agg->add_option("--inputs", inputs, "Per-seed CSV files")
      ->required()
      ->check(CLI::ExistingFile);
  agg->add_option("--out", agg_out, "Output summary CSV path")->required();

  auto* verify = app.add_subcommand(
      "verify-inference", "Run the randomized inference identity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      // Only flags the user actually passed become overrides; everything else
      // falls through to the config file and the per-env defaults.
      std::map<std::string, std::string> cli_kv;
      if (opt_env->count()) cli_kv["env"] = env;
      if (opt_cur->count()) cli_kv["curriculum"] = curriculum;
      if (opt_seed->count()) cli_kv["seed"] = std::to_string(seed);
      if (opt_iter->count()) cli_kv["iterations"] = std::to_string(iterations);
      return cmd_run(cli_kv, config_path, out_path);
    }
    if (agg->parsed()) return cmd_aggregate(inputs, agg_out);
    if (verify->parsed()) return cmd_verify();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
