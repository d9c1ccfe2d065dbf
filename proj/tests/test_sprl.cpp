#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "spcrl/inference.hpp"
#include "spcrl/sprl.hpp"
#include "spcrl/rng.hpp"
#include "toy_cmdps.hpp"

using namespace spcrl;

TEST_CASE("alpha=0 weights are the softmax of values over eta") {
  Eigen::VectorXd v(4);
  v << 1.0, 2.0, 0.5, 3.0;
  const Eigen::VectorXd ln = Eigen::VectorXd::Random(4);
  const Eigen::VectorXd lm = Eigen::VectorXd::Random(4);
  const double eta = 0.7;
  const Eigen::VectorXd w = variational_weights(v, ln, lm, eta, 0.0);
  Eigen::VectorXd ref = (v.array() / eta).exp();
  ref /= ref.sum();
  REQUIRE((w - ref).cwiseAbs().maxCoeff() < 1e-12);
  REQUIRE(std::abs(w.sum() - 1.0) < 1e-12);
}

TEST_CASE("constant values at huge alpha reduce to importance ratios") {
  RngStream rng(41);
  const int k = 6;
  Eigen::VectorXd v = Eigen::VectorXd::Constant(k, 1.3);
  Eigen::VectorXd ln(k), lm(k);
  for (int i = 0; i < k; ++i) {
    ln[i] = rng.uniform(-3.0, 0.0);
    lm[i] = rng.uniform(-3.0, 0.0);
  }
  const Eigen::VectorXd w = variational_weights(v, ln, lm, 1.0, 1e12);
  Eigen::VectorXd ref = (lm - ln).array().exp();
  ref /= ref.sum();
  REQUIRE((w - ref).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("weights are invariant to shifting all values") {
  RngStream rng(42);
  const int k = 8;
  Eigen::VectorXd v(k), ln(k), lm(k);
  for (int i = 0; i < k; ++i) {
    v[i] = rng.uniform(-2.0, 2.0);
    ln[i] = rng.uniform(-3.0, 0.0);
    lm[i] = rng.uniform(-3.0, 0.0);
  }
  const Eigen::VectorXd a = variational_weights(v, ln, lm, 0.5, 1.7);
  const Eigen::VectorXd b =
      variational_weights(v.array() + 123.0, ln, lm, 0.5, 1.7);
  REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("temperature folds into the value scale") {
  RngStream rng(43);
  const int k = 8;
  Eigen::VectorXd v(k), ln(k), lm(k);
  for (int i = 0; i < k; ++i) {
    v[i] = rng.uniform(-2.0, 2.0);
    ln[i] = rng.uniform(-3.0, 0.0);
    lm[i] = rng.uniform(-3.0, 0.0);
  }
  for (double eta : {0.2, 1.0, 5.0}) {
    const Eigen::VectorXd a = variational_weights(v, ln, lm, eta, 0.9);
    const Eigen::VectorXd b = variational_weights(v / eta, ln, lm, 1.0, 0.9);
    REQUIRE((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("weights reproduce the tempered posterior on discrete toys") {
  RngStream rng(44);
  for (int trial = 0; trial < 8; ++trial) {
    const int n_ctx = 3 + trial % 2;
    OptimalityModel m;
    m.cmdp = toys::random_cmdp(rng, 3, 2, n_ctx, 3, 1.0);
    m.policy = toys::random_policy(rng, 3, 2);
    m.prior = Eigen::VectorXd::Constant(n_ctx, 1.0 / n_ctx);
    m.target = toys::random_categorical(rng, n_ctx);
    m.eta = (trial % 2) ? 0.5 : 1.0;
    m.validate();
    const double alpha = 0.3 + trial * 0.4;

    // One sample per context under the uniform prior: the self-normalized
    // weights must equal the tempered posterior pointwise.
    Eigen::VectorXd v(n_ctx), ln(n_ctx), lm(n_ctx);
    for (int c = 0; c < n_ctx; ++c) {
      v[c] = soft_value(m, c);
      ln[c] = std::log(m.prior[c]);
      lm[c] = std::log(m.target[c]);
    }
    const Eigen::VectorXd w = variational_weights(v, ln, lm, m.eta, alpha);
    const Eigen::VectorXd q = tempered_posterior(m, alpha);
    REQUIRE((w - q).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("non-uniform prior weights equal importance-corrected posterior") {
  RngStream rng(45);
  const int n_ctx = 4;
  OptimalityModel m;
  m.cmdp = toys::random_cmdp(rng, 3, 2, n_ctx, 3, 1.0);
  m.policy = toys::random_policy(rng, 3, 2);
  m.prior = toys::random_categorical(rng, n_ctx);
  m.target = toys::random_categorical(rng, n_ctx);
  m.validate();
  const double alpha = 0.8;

  Eigen::VectorXd v(n_ctx), ln(n_ctx), lm(n_ctx);
  for (int c = 0; c < n_ctx; ++c) {
    v[c] = soft_value(m, c);
    ln[c] = std::log(m.prior[c]);
    lm[c] = std::log(m.target[c]);
  }
  const Eigen::VectorXd w = variational_weights(v, ln, lm, m.eta, alpha);
  const Eigen::VectorXd q = tempered_posterior(m, alpha);
  Eigen::VectorXd ref = q.array() / m.prior.array();
  ref /= ref.sum();
  REQUIRE((w - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("degenerate exponents raise instead of returning zeros") {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd ln = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd lm = Eigen::VectorXd::Constant(
      2, -std::numeric_limits<double>::infinity());
  REQUIRE_THROWS_AS(variational_weights(v, ln, lm, 1.0, 1.0),
                    std::runtime_error);
  REQUIRE_THROWS_AS(variational_weights(v, ln, lm, 0.0, 0.5),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(variational_weights(v, ln, lm, 1.0, -0.5),
                    std::invalid_argument);
}

TEST_CASE("uniform weights refit to the plain sample MLE") {
  RngStream rng(46);
  DiagonalGaussian gen((Eigen::VectorXd(2) << 1.0, -2.0).finished(),
                       (Eigen::VectorXd(2) << 0.5, 1.5).finished());
  std::vector<Eigen::VectorXd> ctx;
  for (int i = 0; i < 50; ++i) ctx.push_back(gen.sample(rng));
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(50, 1.0 / 50);
  const Eigen::VectorXd lb = (Eigen::VectorXd(2) << 1e-6, 1e-6).finished();

  const auto refit = sprl_update(ctx, w, gen, lb, 1e9);
  std::vector<double> ones(50, 1.0);
  const auto mle = fit_weighted(ctx, ones);
  REQUIRE(refit.mean().isApprox(mle.mean(), 1e-12));
  REQUIRE(refit.std_dev().isApprox(mle.std_dev(), 1e-12));
}

TEST_CASE("concentrated weights collapse onto one context") {
  std::vector<Eigen::VectorXd> ctx = {(Eigen::VectorXd(1) << 0.0).finished(),
                                      (Eigen::VectorXd(1) << 5.0).finished(),
                                      (Eigen::VectorXd(1) << 9.0).finished()};
  Eigen::VectorXd w(3);
  w << 1e-12, 1.0 - 2e-12, 1e-12;
  DiagonalGaussian target((Eigen::VectorXd(1) << 5.0).finished(),
                          (Eigen::VectorXd(1) << 1.0).finished());
  const Eigen::VectorXd lb = (Eigen::VectorXd(1) << 1e-9).finished();
  const auto fit = sprl_update(ctx, w, target, lb, 1e12);
  REQUIRE(std::abs(fit.mean()[0] - 5.0) < 1e-9);

  // All mass on a single context: variance collapses, and the error surfaces.
  Eigen::VectorXd hard(3);
  hard << 0.0, 1.0, 0.0;
  REQUIRE_THROWS_AS(sprl_update(ctx, hard, target, lb, 1e12),
                    std::runtime_error);
}

TEST_CASE("values increasing in context move the refit mean up") {
  RngStream rng(47);
  DiagonalGaussian nu((Eigen::VectorXd(1) << 2.0).finished(),
                      (Eigen::VectorXd(1) << 1.0).finished());
  DiagonalGaussian target((Eigen::VectorXd(1) << 8.0).finished(),
                          (Eigen::VectorXd(1) << 0.1).finished());
  std::vector<Eigen::VectorXd> ctx;
  Eigen::VectorXd v(40), ln(40), lm(40);
  for (int i = 0; i < 40; ++i) {
    ctx.push_back(nu.sample(rng));
    v[i] = ctx.back()[0];  // linear in the context
    ln[i] = nu.log_pdf(ctx.back());
    lm[i] = target.log_pdf(ctx.back());
  }
  const Eigen::VectorXd w = variational_weights(v, ln, lm, 1.0, 0.0);
  const Eigen::VectorXd lb = (Eigen::VectorXd(1) << 1e-6).finished();
  const auto fit = sprl_update(ctx, w, target, lb, 1e12);
  REQUIRE(fit.mean()[0] > nu.mean()[0]);
}
