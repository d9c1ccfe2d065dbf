#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "spcrl/gae.hpp"
#include "spcrl/mlp.hpp"
#include "spcrl/policy.hpp"
#include "spcrl/ppo.hpp"
#include "spcrl/rng.hpp"

using namespace spcrl;

namespace {

void randomize(Eigen::VectorXd& v, RngStream& rng, double scale = 0.5) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = scale * rng.normal();
}

}  // namespace

TEST_CASE("mlp backward matches finite differences") {
  RngStream rng(61);
  Mlp net(3, 4, 2);
  randomize(net.params(), rng);
  Eigen::MatrixXd x(3, 5), c(2, 5);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  for (int i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();

  Mlp::Cache cache;
  net.forward(x, &cache);
  const Eigen::VectorXd grad = net.backward(cache, c);

  auto loss = [&](const Eigen::VectorXd& p) {
    Mlp probe(3, 4, 2);
    probe.params() = p;
    return (probe.forward(x).array() * c.array()).sum();
  };
  for (int i = 0; i < net.param_count(); ++i) {
    const double fd = oracles::central_diff(loss, net.params(), i, 1e-6);
    REQUIRE(std::abs(grad[i] - fd) <= 1e-6 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("orthogonal init gives orthonormal columns scaled by the gain") {
  RngStream rng(62);
  Mlp net(4, 8, 2);
  net.init_orthogonal(rng, std::sqrt(2.0), 0.01);
  // Probe the first-layer weights through the forward pass at zero input:
  // output of layer 1 is tanh(b1)=0, so check the parameter block directly.
  Eigen::Map<const Eigen::MatrixXd> w1(net.params().data(), 8, 4);
  const Eigen::MatrixXd gram = w1.transpose() * w1;
  REQUIRE((gram - 2.0 * Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
          1e-10);
}

TEST_CASE("policy log-prob matches the literal Gaussian density") {
  GaussianPolicy policy(2, 3, 2);
  policy.log_std() << std::log(0.5), std::log(2.0);
  Eigen::VectorXd mean(2), action(2);
  mean << 0.3, -0.7;
  action << 0.5, 0.1;
  const double expect = oracles::normal_log_pdf_1d(0.5, 0.3, 0.5) +
                        oracles::normal_log_pdf_1d(0.1, -0.7, 2.0);
  REQUIRE(std::abs(policy.log_prob(mean, action) - expect) < 1e-12);
}

TEST_CASE("policy gradient helpers match finite differences") {
  RngStream rng(63);
  for (int trial = 0; trial < 20; ++trial) {
    GaussianPolicy policy(1, 1, 2);
    randomize(policy.log_std(), rng, 0.4);
    Eigen::VectorXd mean(2), action(2);
    randomize(mean, rng, 1.0);
    randomize(action, rng, 1.0);

    const Eigen::VectorXd gm = policy.dlogp_dmean(mean, action);
    const Eigen::VectorXd gs = policy.dlogp_dlog_std(mean, action);
    auto f_mean = [&](const Eigen::VectorXd& m) {
      return policy.log_prob(m, action);
    };
    for (int i = 0; i < 2; ++i) {
      const double fd = oracles::central_diff(f_mean, mean, i, 1e-6);
      REQUIRE(std::abs(gm[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
    const Eigen::VectorXd ls = policy.log_std();
    auto f_ls = [&](const Eigen::VectorXd& l) {
      GaussianPolicy p2(1, 1, 2);
      p2.log_std() = l;
      return p2.log_prob(mean, action);
    };
    for (int i = 0; i < 2; ++i) {
      const double fd = oracles::central_diff(f_ls, ls, i, 1e-6);
      REQUIRE(std::abs(gs[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("freshly constructed policy outputs the zero mean") {
  GaussianPolicy policy(3, 4, 2);  // zero-initialized parameters
  Eigen::VectorXd obs(3);
  obs << 1.0, -2.0, 0.5;
  REQUIRE(policy.mean_action(obs).cwiseAbs().maxCoeff() == 0.0);

  Mlp value(3, 4, 1);
  REQUIRE(value.forward(obs)(0, 0) == 0.0);
}

TEST_CASE("sampling is seed-reproducible and mean-centered in the limit") {
  RngStream init(64);
  GaussianPolicy policy(2, 4, 1);
  policy.init(init);
  Eigen::VectorXd obs(2);
  obs << 0.5, -0.5;

  RngStream a(7), b(7);
  for (int i = 0; i < 50; ++i)
    REQUIRE(policy.sample_action(obs, a) == policy.sample_action(obs, b));

  RngStream c(8);
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += policy.sample_action(obs, c)[0];
  REQUIRE(std::abs(acc / n - policy.mean_action(obs)[0]) < 0.02);
}

TEST_CASE("value network fits a constant target") {
  RngStream rng(65);
  Mlp value(2, 16, 1);
  value.init_orthogonal(rng, std::sqrt(2.0), 1.0);
  Adam adam(value.param_count(), 1e-2);

  Eigen::MatrixXd obs(2, 64);
  for (int i = 0; i < obs.size(); ++i) obs.data()[i] = rng.normal();
  const Eigen::VectorXd targets = Eigen::VectorXd::Constant(64, 3.7);
  for (int step = 0; step < 3000; ++step) {
    Eigen::VectorXd g;
    value_loss_and_grad(value, obs, targets, &g);
    adam.step(value.params(), g);
  }
  const Eigen::MatrixXd v = value.forward(obs);
  REQUIRE((v.array() - 3.7).abs().maxCoeff() < 1e-2);
}

TEST_CASE("gae recursion reproduces the hand-computed example") {
  Eigen::VectorXd rewards(2), values(3);
  rewards << 1.0, 1.0;
  values << 0.5, 0.5, 0.0;
  const auto out = gae_advantages(rewards, values, 0.9, 0.95);
  // delta_0 = 0.95, delta_1 = 0.5, A_0 = 0.95 + 0.9*0.95*0.5 = 1.3775.
  REQUIRE(std::abs(out.advantages[0] - 1.3775) < 1e-12);
  REQUIRE(std::abs(out.advantages[1] - 0.5) < 1e-12);
  REQUIRE(std::abs(out.targets[0] - 1.8775) < 1e-12);
  REQUIRE(std::abs(out.targets[1] - 1.0) < 1e-12);
}

TEST_CASE("gae limiting cases") {
  RngStream rng(66);
  Eigen::VectorXd rewards(5), values(6);
  randomize(rewards, rng, 1.0);
  randomize(values, rng, 1.0);

  // lambda = 0: plain TD residuals.
  auto out = gae_advantages(rewards, values, 0.9, 0.0);
  for (int t = 0; t < 5; ++t) {
    const double delta = rewards[t] + 0.9 * values[t + 1] - values[t];
    REQUIRE(std::abs(out.advantages[t] - delta) < 1e-12);
  }

  // lambda = 1, gamma = 1, zero values: undiscounted reward-to-go.
  Eigen::VectorXd zeros = Eigen::VectorXd::Zero(6);
  out = gae_advantages(rewards, zeros, 1.0, 1.0);
  double tail = 0.0;
  for (int t = 4; t >= 0; --t) {
    tail += rewards[t];
    REQUIRE(std::abs(out.advantages[t] - tail) < 1e-12);
  }

  REQUIRE_THROWS_AS(gae_advantages(rewards, rewards, 0.9, 0.95),
                    std::invalid_argument);
}

TEST_CASE("surrogate and value gradients match finite differences") {
  RngStream rng(67);
  for (int trial = 0; trial < 15; ++trial) {
    GaussianPolicy policy(2, 2, 1);
    randomize(policy.net().params(), rng);
    randomize(policy.log_std(), rng, 0.3);
    const int n = 6;
    Eigen::MatrixXd obs(2, n), act(1, n);
    for (int i = 0; i < obs.size(); ++i) obs.data()[i] = rng.normal();
    Eigen::VectorXd lp_old(n), adv(n);
    for (int j = 0; j < n; ++j) {
      act(0, j) = rng.normal();
      // Keep ratios near 1 but off the kink, and off the clip edges.
      lp_old[j] = policy.log_prob(policy.mean_action(obs.col(j)), act.col(j)) +
                  rng.uniform(0.02, 0.08) * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      adv[j] = rng.normal() + 0.1;
    }

    Eigen::VectorXd g_net, g_ls;
    surrogate_loss_and_grad(policy, obs, act, lp_old, adv, 0.2, &g_net, &g_ls);

    const int np = policy.net().param_count();
    Eigen::VectorXd x(np + 1);
    x << policy.net().params(), policy.log_std();
    auto loss = [&](const Eigen::VectorXd& p) {
      GaussianPolicy probe(2, 2, 1);
      probe.net().params() = p.head(np);
      probe.log_std() = p.tail(1);
      return surrogate_loss_and_grad(probe, obs, act, lp_old, adv, 0.2, nullptr,
                                     nullptr);
    };
    for (int i = 0; i < np + 1; ++i) {
      const double fd = oracles::central_diff(loss, x, i, 1e-6);
      const double an = i < np ? g_net[i] : g_ls[0];
      REQUIRE(std::abs(an - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }

    Mlp value(2, 2, 1);
    randomize(value.params(), rng);
    Eigen::VectorXd targets(n);
    randomize(targets, rng, 1.0);
    Eigen::VectorXd g_val;
    value_loss_and_grad(value, obs, targets, &g_val);
    auto vloss = [&](const Eigen::VectorXd& p) {
      Mlp probe(2, 2, 1);
      probe.params() = p;
      return value_loss_and_grad(probe, obs, targets, nullptr);
    };
    for (int i = 0; i < value.param_count(); ++i) {
      const double fd = oracles::central_diff(vloss, value.params(), i, 1e-6);
      REQUIRE(std::abs(g_val[i] - fd) <= 1e-4 * std::max(1.0, std::abs(fd)));
    }
  }
}

namespace {

PpoBatch random_batch(RngStream& rng, GaussianPolicy& policy, int n) {
  PpoBatch b;
  b.obs.resize(2, n);
  b.actions.resize(1, n);
  b.old_log_prob.resize(n);
  b.advantages.resize(n);
  b.value_targets.resize(n);
  for (int i = 0; i < b.obs.size(); ++i) b.obs.data()[i] = rng.normal();
  for (int j = 0; j < n; ++j) {
    b.actions(0, j) = rng.normal();
    b.old_log_prob[j] =
        policy.log_prob(policy.mean_action(b.obs.col(j)), b.actions.col(j));
    b.advantages[j] = rng.normal();
    b.value_targets[j] = rng.normal();
  }
  return b;
}

}  // namespace

TEST_CASE("zero advantages leave the policy network untouched") {
  RngStream rng(68);
  GaussianPolicy policy(2, 4, 1);
  policy.init(rng);
  Mlp value(2, 4, 1);
  value.init_orthogonal(rng, std::sqrt(2.0), 1.0);

  auto batch = random_batch(rng, policy, 32);
  batch.advantages.setZero();
  const Eigen::VectorXd before = policy.net().params();
  const Eigen::VectorXd value_before = value.params();

  PpoConfig cfg;
  cfg.epochs = 3;
  cfg.minibatches = 4;
  PpoUpdater updater(policy, value, cfg);
  RngStream update_rng(1);
  const auto diag = updater.update(batch, update_rng);
  REQUIRE(diag.ok);
  REQUIRE((policy.net().params() - before).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE((value.params() - value_before).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("a positive-advantage action becomes more likely") {
  RngStream rng(69);
  GaussianPolicy policy(2, 4, 1);
  policy.init(rng);
  Mlp value(2, 4, 1);

  PpoBatch b;
  b.obs = Eigen::MatrixXd::Zero(2, 2);
  b.obs(0, 1) = 1.0;  // two distinct states
  b.actions.resize(1, 2);
  b.actions << 0.7, -0.4;
  b.old_log_prob.resize(2);
  for (int j = 0; j < 2; ++j)
    b.old_log_prob[j] =
        policy.log_prob(policy.mean_action(b.obs.col(j)), b.actions.col(j));
  b.advantages.resize(2);
  b.advantages << 1.0, -1.0;
  b.value_targets = Eigen::VectorXd::Zero(2);

  const double lp_before = b.old_log_prob[0];
  PpoConfig cfg;
  cfg.epochs = 4;
  cfg.minibatches = 1;
  cfg.lr = 1e-2;
  PpoUpdater updater(policy, value, cfg);
  RngStream update_rng(2);
  REQUIRE(updater.update(b, update_rng).ok);
  const double lp_after =
      policy.log_prob(policy.mean_action(b.obs.col(0)), b.actions.col(0));
  REQUIRE(lp_after > lp_before);
}

TEST_CASE("updates are deterministic given the batch and seed") {
  for (int run = 0; run < 2; ++run) {
    static Eigen::VectorXd first_net, first_ls, first_val;
    RngStream rng(70);
    GaussianPolicy policy(2, 4, 1);
    policy.init(rng);
    Mlp value(2, 4, 1);
    value.init_orthogonal(rng, std::sqrt(2.0), 1.0);
    auto batch = random_batch(rng, policy, 40);

    PpoConfig cfg;
    cfg.epochs = 3;
    cfg.minibatches = 5;
    PpoUpdater updater(policy, value, cfg);
    RngStream update_rng(99);
    REQUIRE(updater.update(batch, update_rng).ok);
    if (run == 0) {
      first_net = policy.net().params();
      first_ls = policy.log_std();
      first_val = value.params();
    } else {
      REQUIRE(policy.net().params() == first_net);
      REQUIRE(policy.log_std() == first_ls);
      REQUIRE(value.params() == first_val);
    }
  }
}

TEST_CASE("non-finite inputs roll the update back") {
  RngStream rng(71);
  GaussianPolicy policy(2, 4, 1);
  policy.init(rng);
  Mlp value(2, 4, 1);
  auto batch = random_batch(rng, policy, 16);
  batch.advantages[3] = std::numeric_limits<double>::quiet_NaN();

  const Eigen::VectorXd before = policy.net().params();
  PpoConfig cfg;
  PpoUpdater updater(policy, value, cfg);
  RngStream update_rng(3);
  const auto diag = updater.update(batch, update_rng);
  REQUIRE_FALSE(diag.ok);
  REQUIRE(policy.net().params() == before);

  PpoBatch empty;
  empty.obs.resize(2, 0);
  empty.actions.resize(1, 0);
  REQUIRE_FALSE(updater.update(empty, update_rng).ok);
}
