#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "spcrl/config.hpp"
#include "spcrl/csv.hpp"
#include "spcrl/gae.hpp"
#include "spcrl/gaussian.hpp"
#include "spcrl/grid_chain.hpp"
#include "spcrl/point_mass.hpp"
#include "spcrl/policy.hpp"
#include "spcrl/ppo.hpp"
#include "spcrl/rng.hpp"
#include "spcrl/rollout.hpp"
#include "spcrl/spdl.hpp"
#include "spcrl/sprl.hpp"
#include "spcrl/stats.hpp"

namespace spcrl {

inline std::unique_ptr<Env> make_env_for(const ExperimentConfig& cfg) {
  if (cfg.env == "pointmass2d")
    return std::make_unique<PointMassEnv>(false, cfg.pm_dt, cfg.pm_force_limit);
  if (cfg.env == "pointmass3d")
    return std::make_unique<PointMassEnv>(true, cfg.pm_dt, cfg.pm_force_limit);
  if (cfg.env == "gridchain") return std::make_unique<GridChainEnv>();
  throw std::invalid_argument("unknown env: " + cfg.env);
}

struct EvalResult {
  double mean = 0.0;
  double std_err = 0.0;
};

// Deterministic-policy evaluation on contexts drawn from the target
// distribution (clipped to the context box). Per-episode discounted returns
// feed the mean and its standard error.
inline EvalResult evaluate_target(Env& env, const GaussianPolicy& policy,
                                  const DiagonalGaussian& target, int episodes,
                                  RngStream& rng, double gamma) {
  if (episodes < 2) throw std::invalid_argument("evaluate_target: need episodes >= 2");
  const Box box = env.context_box();
  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(episodes));
  for (int e = 0; e < episodes; ++e) {
    const Eigen::VectorXd c = target.sample(rng, box);
    const Trajectory traj = run_episode(
        env, [&](const Eigen::VectorXd& obs) { return policy.mean_action(obs); },
        c, env.max_steps());
    returns.push_back(traj.discounted_return(gamma));
  }
  return EvalResult{mean_of(returns), stderr_of(returns)};
}

// One full training run. Per iteration: collect roughly n_step transitions of
// on-policy experience (one context per episode), run the policy/value update,
// re-estimate context values through the freshly updated value head, then let
// the active curriculum move the context distribution. Returns one record per
// iteration; run_experiment_to_csv persists them.
inline std::vector<IterationRecord> run_experiment(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const auto env_ptr = make_env_for(cfg);
  Env& env = *env_ptr;
  const Box box = env.context_box();
  const auto obs_dim = static_cast<int>(env.obs_dim());
  const auto act_dim = static_cast<int>(env.action_dim());
  const Eigen::Index ctx_dim = env.context_dim();

  const DiagonalGaussian mu(cfg.target_mean, cfg.target_std);
  DiagonalGaussian nu = cfg.curriculum == "default"
                            ? mu
                            : DiagonalGaussian(cfg.init_mean, cfg.init_std);
  const bool uses_nu = cfg.curriculum == "spdl" || cfg.curriculum == "sprl";
  bool converged = false;  // curriculum reached the target; nu frozen at mu

  RngStream context_rng(cfg.seed, stream::context);
  RngStream policy_rng(cfg.seed, stream::policy_init);
  RngStream rollout_rng(cfg.seed, stream::rollout);
  RngStream eval_rng(cfg.seed, stream::eval);
  RngStream shuffle_rng(cfg.seed, stream::shuffle);

  GaussianPolicy policy(obs_dim, cfg.hidden, act_dim);
  policy.init(policy_rng);
  Mlp value_net(obs_dim, cfg.hidden, 1);
  value_net.init_orthogonal(policy_rng, std::sqrt(2.0), 1.0);
  PpoUpdater updater(policy, value_net, cfg.ppo);

  std::vector<IterationRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.iterations));

  for (int iter = 1; iter <= cfg.iterations; ++iter) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<Eigen::VectorXd> ep_contexts, ep_first_obs;
    std::vector<double> ep_returns;
    std::vector<Eigen::VectorXd> flat_obs, flat_act;
    std::vector<double> flat_lp, flat_adv, flat_tgt;

    int steps = 0;
    while (steps < cfg.n_step) {
      Eigen::VectorXd c(ctx_dim);
      if (cfg.curriculum == "random") {
        for (Eigen::Index i = 0; i < ctx_dim; ++i)
          c[i] = context_rng.uniform(box.lo[i], box.hi[i]);
      } else {
        c = (uses_nu ? nu : mu).sample(context_rng, box);
      }

      Eigen::VectorXd obs = env.reset(c);
      ep_contexts.push_back(c);
      ep_first_obs.push_back(obs);

      std::vector<double> rewards, values;
      bool terminal = false;
      for (int t = 0; t < env.max_steps() && !terminal; ++t) {
        const Eigen::VectorXd mean = policy.mean_action(obs);
        Eigen::VectorXd a = mean;
        for (int j = 0; j < act_dim; ++j)
          a[j] += std::exp(policy.log_std()[j]) * rollout_rng.normal();
        values.push_back(value_net.forward(obs)(0));
        flat_obs.push_back(obs);
        flat_act.push_back(a);
        flat_lp.push_back(policy.log_prob(mean, a));

        const StepOut out = env.step(a);
        rewards.push_back(out.reward);
        obs = out.obs;
        terminal = out.terminal;
      }
      values.push_back(0.0);  // every episode end bootstraps zero

      const auto t_len = static_cast<Eigen::Index>(rewards.size());
      const Eigen::Map<const Eigen::VectorXd> rew(rewards.data(), t_len);
      const Eigen::Map<const Eigen::VectorXd> val(values.data(), t_len + 1);
      const GaeOut gae = gae_advantages(rew, val, cfg.ppo.gamma, cfg.ppo.lam);
      for (Eigen::Index t = 0; t < t_len; ++t) {
        flat_adv.push_back(gae.advantages[t]);
        flat_tgt.push_back(gae.targets[t]);
      }

      double ret = 0.0, g = 1.0;
      for (double r : rewards) {
        ret += g * r;
        g *= cfg.ppo.gamma;
      }
      ep_returns.push_back(ret);
      steps += static_cast<int>(t_len);
    }

    PpoBatch batch;
    const auto n = static_cast<Eigen::Index>(flat_obs.size());
    batch.obs.resize(obs_dim, n);
    batch.actions.resize(act_dim, n);
    batch.old_log_prob.resize(n);
    batch.advantages.resize(n);
    batch.value_targets.resize(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      batch.obs.col(j) = flat_obs[static_cast<std::size_t>(j)];
      batch.actions.col(j) = flat_act[static_cast<std::size_t>(j)];
      batch.old_log_prob[j] = flat_lp[static_cast<std::size_t>(j)];
      batch.advantages[j] = flat_adv[static_cast<std::size_t>(j)];
      batch.value_targets[j] = flat_tgt[static_cast<std::size_t>(j)];
    }
    updater.update(batch, shuffle_rng);

    double alpha_used = 0.0;
    const auto n_ep = static_cast<Eigen::Index>(ep_contexts.size());
    if (uses_nu && !converged && iter > cfg.curriculum_cfg.n_offset && n_ep >= 2) {
      // Start-state values through the just-updated value head drive the
      // context step.
      Eigen::MatrixXd first_obs(obs_dim, n_ep);
      for (Eigen::Index k = 0; k < n_ep; ++k)
        first_obs.col(k) = ep_first_obs[static_cast<std::size_t>(k)];
      const Eigen::MatrixXd v0 = value_net.forward(first_obs);

      ContextSampleSet samples;
      samples.contexts = ep_contexts;
      samples.old_log_pdf.resize(n_ep);
      samples.values = v0.row(0).transpose();
      samples.returns.resize(n_ep);
      for (Eigen::Index k = 0; k < n_ep; ++k) {
        samples.old_log_pdf[k] = nu.log_pdf(ep_contexts[static_cast<std::size_t>(k)]);
        samples.returns[k] = ep_returns[static_cast<std::size_t>(k)];
      }

      const AlphaResult ar = compute_alpha(iter, samples, nu, mu, cfg.curriculum_cfg);
      if (ar.converged) {
        nu = mu;
        converged = true;
      } else if (cfg.curriculum == "spdl") {
        alpha_used = ar.alpha;
        nu = update_context(nu, samples, mu, ar.alpha, cfg.curriculum_cfg).nu;
      } else {
        alpha_used = ar.alpha;
        try {
          Eigen::VectorXd log_mu(n_ep);
          for (Eigen::Index k = 0; k < n_ep; ++k)
            log_mu[k] = mu.log_pdf(ep_contexts[static_cast<std::size_t>(k)]);
          const Eigen::VectorXd w =
              variational_weights(samples.values, samples.old_log_pdf, log_mu,
                                  cfg.curriculum_cfg.eta, ar.alpha);
          nu = sprl_update(samples.contexts, w, mu, cfg.curriculum_cfg.sigma_lb,
                           cfg.curriculum_cfg.d_kl_lb);
        } catch (const std::exception&) {
          // Degenerate weights or a collapsed refit: hold the distribution.
        }
      }
    }

    const EvalResult eval =
        evaluate_target(env, policy, mu, cfg.eval_episodes, eval_rng, cfg.ppo.gamma);

    IterationRecord rec;
    rec.iteration = iter;
    rec.train_return_mean = mean_of(ep_returns);
    rec.eval_return_mean = eval.mean;
    rec.eval_return_stderr = eval.std_err;
    rec.alpha = alpha_used;
    if (cfg.curriculum == "random") {
      // No distribution is being adapted; report the empirical spread of the
      // uniform draws and leave the KL column at zero.
      rec.kl_to_target = 0.0;
      Eigen::VectorXd m = Eigen::VectorXd::Zero(ctx_dim);
      for (const auto& c : ep_contexts) m += c;
      m /= static_cast<double>(n_ep);
      Eigen::VectorXd var = Eigen::VectorXd::Zero(ctx_dim);
      for (const auto& c : ep_contexts) var += (c - m).array().square().matrix();
      var /= static_cast<double>(n_ep);
      rec.ctx_mean = m;
      rec.ctx_std = var.array().sqrt().matrix();
    } else {
      rec.kl_to_target = kl_divergence(nu, mu);
      rec.ctx_mean = nu.mean();
      rec.ctx_std = nu.std_dev();
    }
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    records.push_back(std::move(rec));
  }
  return records;
}

inline void run_experiment_to_csv(const ExperimentConfig& cfg,
                                  const std::string& out_path) {
  const std::vector<IterationRecord> records = run_experiment(cfg);
  write_run_csv(out_path, cfg.env, cfg.curriculum, cfg.seed,
                static_cast<int>(context_dim_of(cfg.env)), records);
}

// Cross-seed summary of one curriculum at the aligned final iteration.
struct CurriculumSummary {
  std::string curriculum;
  int n_seeds = 0;
  int final_iteration = 0;
  double eval_return_mean = 0.0;
  double eval_return_stderr = 0.0;
  double p_vs_default = std::numeric_limits<double>::quiet_NaN();
};

// Groups per-seed CSVs by curriculum, aligns every run on the lowest common
// final iteration (warning when runs disagree), and reports per-curriculum
// mean, standard error, and a Welch t-test p-value against the default
// baseline (NaN when no default runs are present; 1 for default itself).
inline std::vector<CurriculumSummary> aggregate(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::invalid_argument("aggregate: no input files");
  std::vector<RunLog> logs;
  logs.reserve(paths.size());
  int common_final = std::numeric_limits<int>::max();
  bool mismatch = false;
  for (const auto& p : paths) {
    RunLog log = read_run_csv(p);
    if (log.records.empty())
      throw std::runtime_error("aggregate: no iterations in " + p);
    const int fin = log.records.back().iteration;
    if (!logs.empty() && fin != logs.front().records.back().iteration) mismatch = true;
    common_final = std::min(common_final, fin);
    logs.push_back(std::move(log));
  }
  if (mismatch)
    std::cerr << "aggregate: iteration counts differ, aligning on iteration "
              << common_final << "\n";

  std::map<std::string, std::vector<double>> finals;
  for (const auto& log : logs) {
    const IterationRecord* hit = nullptr;
    for (const auto& r : log.records)
      if (r.iteration == common_final) {
        hit = &r;
        break;
      }
    if (!hit)
      throw std::runtime_error("aggregate: run for curriculum '" + log.curriculum +
                               "' lacks iteration " + std::to_string(common_final));
    finals[log.curriculum].push_back(hit->eval_return_mean);
  }
  for (const auto& [cur, vals] : finals)
    if (vals.size() < 2)
      throw std::runtime_error("aggregate: need >= 2 seeds for curriculum '" + cur +
                               "', got " + std::to_string(vals.size()));

  const auto def = finals.find("default");
  std::vector<CurriculumSummary> rows;
  for (const auto& [cur, vals] : finals) {
    CurriculumSummary row;
    row.curriculum = cur;
    row.n_seeds = static_cast<int>(vals.size());
    row.final_iteration = common_final;
    row.eval_return_mean = mean_of(vals);
    row.eval_return_stderr = stderr_of(vals);
    if (def != finals.end())
      row.p_vs_default = cur == "default" ? 1.0 : welch_t_test(vals, def->second).p_value;
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void write_aggregate_csv(const std::string& path,
                                const std::vector<CurriculumSummary>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "curriculum,n_seeds,final_iteration,eval_return_mean,eval_return_stderr,"
         "p_vs_default\n";
  for (const auto& r : rows) {
    out << r.curriculum << ',' << r.n_seeds << ',' << r.final_iteration << ','
        << format_double(r.eval_return_mean) << ','
        << format_double(r.eval_return_stderr) << ','
        << format_double(r.p_vs_default) << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace spcrl
