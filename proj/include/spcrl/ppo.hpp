#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spcrl/mlp.hpp"
#include "spcrl/policy.hpp"
#include "spcrl/rng.hpp"

namespace spcrl {

struct PpoConfig {
  double gamma = 0.95;
  double lam = 0.99;
  double clip = 0.2;
  int epochs = 8;
  int minibatches = 32;
  double lr = 3e-4;
};

// Flattened transitions across all episodes of one iteration.
struct PpoBatch {
  Eigen::MatrixXd obs;           // obs_dim x N
  Eigen::MatrixXd actions;       // act_dim x N
  Eigen::VectorXd old_log_prob;  // N
  Eigen::VectorXd advantages;    // N, raw (standardized inside the update)
  Eigen::VectorXd value_targets; // N

  Eigen::Index size() const { return old_log_prob.size(); }
};

struct PpoDiagnostics {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double approx_kl = 0.0;
  bool ok = true;  // false: non-finite encountered, parameters rolled back
};

// Clipped-surrogate loss over a column subset, with analytic gradients into
// the policy network parameters and the log-std. Returns the mean loss.
inline double surrogate_loss_and_grad(const GaussianPolicy& policy,
                                      const Eigen::MatrixXd& obs,
                                      const Eigen::MatrixXd& actions,
                                      const Eigen::VectorXd& old_log_prob,
                                      const Eigen::VectorXd& advantages,
                                      double clip, Eigen::VectorXd* grad_net,
                                      Eigen::VectorXd* grad_log_std) {
  const Eigen::Index n = obs.cols();
  Mlp::Cache cache;
  const Eigen::MatrixXd means = policy.net().forward(obs, &cache);

  Eigen::MatrixXd d_means = Eigen::MatrixXd::Zero(means.rows(), n);
  Eigen::VectorXd d_log_std = Eigen::VectorXd::Zero(policy.act_dim());
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double lp = policy.log_prob(means.col(j), actions.col(j));
    const double ratio = std::exp(lp - old_log_prob[j]);
    const double a = advantages[j];
    const double surr1 = ratio * a;
    const double surr2 = std::clamp(ratio, 1.0 - clip, 1.0 + clip) * a;
    loss -= std::min(surr1, surr2);
    // The clipped branch is constant in the parameters, so only the
    // unclipped minimum propagates gradient (d surr1/d logp = surr1).
    if (surr1 <= surr2) {
      const double d_lp = -surr1 / static_cast<double>(n);
      d_means.col(j) = d_lp * policy.dlogp_dmean(means.col(j), actions.col(j));
      d_log_std += d_lp * policy.dlogp_dlog_std(means.col(j), actions.col(j));
    }
  }
  if (grad_net) *grad_net = policy.net().backward(cache, d_means);
  if (grad_log_std) *grad_log_std = d_log_std;
  return loss / static_cast<double>(n);
}

// Mean squared error of the value head against the GAE targets.
inline double value_loss_and_grad(const Mlp& value_net, const Eigen::MatrixXd& obs,
                                  const Eigen::VectorXd& targets,
                                  Eigen::VectorXd* grad) {
  const Eigen::Index n = obs.cols();
  Mlp::Cache cache;
  const Eigen::MatrixXd v = value_net.forward(obs, &cache);
  const Eigen::MatrixXd err = v - targets.transpose();
  if (grad) *grad = value_net.backward(cache, (2.0 / n) * err);
  return err.array().square().sum() / static_cast<double>(n);
}

class PpoUpdater {
 public:
  PpoUpdater(GaussianPolicy& policy, Mlp& value_net, const PpoConfig& cfg)
      : policy_(policy),
        value_net_(value_net),
        cfg_(cfg),
        adam_net_(policy.net().param_count(), cfg.lr),
        adam_log_std_(policy.act_dim(), cfg.lr),
        adam_value_(value_net.param_count(), cfg.lr) {}

  PpoDiagnostics update(const PpoBatch& batch, RngStream& rng) {
    PpoDiagnostics diag;
    const Eigen::Index n = batch.size();
    if (n == 0) {
      diag.ok = false;
      return diag;
    }
    // Roll back everything if numerics blow up mid-update.
    const Eigen::VectorXd net0 = policy_.net().params();
    const Eigen::VectorXd ls0 = policy_.log_std();
    const Eigen::VectorXd val0 = value_net_.params();
    const Adam a0 = adam_net_, a1 = adam_log_std_, a2 = adam_value_;

    Eigen::VectorXd adv = batch.advantages;
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().mean());
    adv = ((adv.array() - mean) / (sd + 1e-8)).matrix();

    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const int n_chunks = std::min<int>(cfg_.minibatches, static_cast<int>(n));

    bool finite = adv.allFinite() && batch.obs.allFinite() &&
                  batch.actions.allFinite() && batch.old_log_prob.allFinite() &&
                  batch.value_targets.allFinite();
    for (int epoch = 0; epoch < cfg_.epochs && finite; ++epoch) {
      shuffle(order, rng);
      for (int chunk = 0; chunk < n_chunks && finite; ++chunk) {
        const auto idx = chunk_indices(order, chunk, n_chunks);
        const Eigen::MatrixXd obs = gather_cols(batch.obs, idx);
        const Eigen::MatrixXd act = gather_cols(batch.actions, idx);
        const Eigen::VectorXd lp_old = gather(batch.old_log_prob, idx);
        const Eigen::VectorXd a = gather(adv, idx);
        const Eigen::VectorXd tgt = gather(batch.value_targets, idx);

        Eigen::VectorXd g_net, g_ls, g_val;
        const double pl = surrogate_loss_and_grad(policy_, obs, act, lp_old, a,
                                                  cfg_.clip, &g_net, &g_ls);
        const double vl = value_loss_and_grad(value_net_, obs, tgt, &g_val);
        finite = std::isfinite(pl) && std::isfinite(vl) && g_net.allFinite() &&
                 g_ls.allFinite() && g_val.allFinite();
        if (!finite) break;
        adam_net_.step(policy_.net().params(), g_net);
        adam_log_std_.step(policy_.log_std(), g_ls);
        adam_value_.step(value_net_.params(), g_val);
      }
    }

    finite = finite && policy_.net().params().allFinite() &&
             policy_.log_std().allFinite() && value_net_.params().allFinite();
    if (!finite) {
      policy_.net().params() = net0;
      policy_.log_std() = ls0;
      value_net_.params() = val0;
      adam_net_ = a0;
      adam_log_std_ = a1;
      adam_value_ = a2;
      diag.ok = false;
      return diag;
    }

    diag.policy_loss = surrogate_loss_and_grad(
        policy_, batch.obs, batch.actions, batch.old_log_prob, adv, cfg_.clip,
        nullptr, nullptr);
    diag.value_loss =
        value_loss_and_grad(value_net_, batch.obs, batch.value_targets, nullptr);
    double kl = 0.0;
    const Eigen::MatrixXd means = policy_.net().forward(batch.obs);
    for (Eigen::Index j = 0; j < n; ++j)
      kl += batch.old_log_prob[j] - policy_.log_prob(means.col(j), batch.actions.col(j));
    diag.approx_kl = kl / static_cast<double>(n);
    return diag;
  }

 private:
  static void shuffle(std::vector<Eigen::Index>& order, RngStream& rng) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[rng.uniform_int(0, static_cast<int>(i) - 1)]);
  }

  static std::vector<Eigen::Index> chunk_indices(
      const std::vector<Eigen::Index>& order, int chunk, int n_chunks) {
    const Eigen::Index n = static_cast<Eigen::Index>(order.size());
    const Eigen::Index lo = n * chunk / n_chunks;
    const Eigen::Index hi = n * (chunk + 1) / n_chunks;
    return {order.begin() + lo, order.begin() + hi};
  }

  static Eigen::MatrixXd gather_cols(const Eigen::MatrixXd& m,
                                     const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out.col(j) = m.col(idx[j]);
    return out;
  }

  static Eigen::VectorXd gather(const Eigen::VectorXd& v,
                                const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) out[j] = v[idx[j]];
    return out;
  }

  GaussianPolicy& policy_;
  Mlp& value_net_;
  PpoConfig cfg_;
  Adam adam_net_, adam_log_std_, adam_value_;
};

}  // namespace spcrl
