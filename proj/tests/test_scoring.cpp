#include <cmath>
#include <vector>

#include "actsel/nn.hpp"
#include "actsel/rng.hpp"
#include "actsel/scoring.hpp"
#include "doctest.h"

using namespace actsel;

namespace {

// out_0 = w * x + b with a single linear layer; the second output column is
// zeroed and targeted at zero so it never contributes loss or gradient.
// Ground for the 1-D quadratic worked example (MSE carries the 1/2 factor).
nn::ModelParams scalar_model(double w, double b) {
  nn::ModelSpec spec;
  spec.layer_widths = {1};
  spec.out_dim = 2;
  nn::ModelParams params = nn::init_params(spec, 0);
  REQUIRE(params.weights.size() == 1);
  params.weights[0].data[0] = w;
  params.weights[0].data[1] = 0.0;
  params.biases[0].data[0] = b;
  params.biases[0].data[1] = 0.0;
  return params;
}

nn::Batch scalar_batch(double x, double target) {
  nn::Batch batch;
  batch.features = Tensor::matrix(1, 1);
  batch.features.at(0, 0) = x;
  batch.targets = Tensor::matrix(1, 2);
  batch.targets.at(0, 0) = target;
  batch.targets.at(0, 1) = 0.0;
  return batch;
}

nn::Batch random_class_batch(int d, int k, std::size_t n, Rng& rng) {
  nn::Batch batch;
  batch.features = Tensor::matrix(n, d);
  for (double& x : batch.features.data) x = rng.next_normal();
  batch.labels.resize(n);
  for (int& y : batch.labels) y = static_cast<int>(rng.next_below(k));
  return batch;
}

}  // namespace

TEST_CASE("score identities") {
  std::vector<double> lo = {1.5, 0.2, 3.0};
  std::vector<double> lr = {0.5, 0.9, 0.1};
  auto hard = scoring::score_hard(lo);
  auto easy = scoring::score_easy(lr);
  auto learn = scoring::score_learnability(lo, lr);
  auto rho = scoring::score_rho(lo, lr);
  for (std::size_t i = 0; i < lo.size(); ++i) {
    CHECK(hard[i] == lo[i]);
    CHECK(easy[i] == -lr[i]);
    CHECK(learn[i] == hard[i] + easy[i]);  // s_learn = s_hard + s_easy
    CHECK(rho[i] == learn[i]);             // same arithmetic, other cost column
  }
}

TEST_CASE("policy names round-trip") {
  for (auto p : {scoring::Policy::Uniform, scoring::Policy::HardLearner,
                 scoring::Policy::EasyReference, scoring::Policy::Learnability,
                 scoring::Policy::Rho, scoring::Policy::GradNorm})
    CHECK(scoring::policy_from_name(scoring::policy_name(p)) == p);
  CHECK_THROWS_AS(scoring::policy_from_name("nonsense"), ConfigError);
}

TEST_CASE("taylor gap: 1-D quadratic worked example") {
  // loss = 1/2 (theta - 2)^2; online theta 1, reference theta 0.9.
  auto online = scalar_model(1.0, 0.0);
  auto reference = scalar_model(0.9, 0.0);
  auto batch = scalar_batch(1.0, 2.0);
  auto rows = scoring::taylor_gap(online, reference, batch, nn::LossKind::Mse);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].exact == doctest::Approx(-0.105).epsilon(1e-12));
  CHECK(rows[0].approx == doctest::Approx(-0.100).epsilon(1e-12));
  CHECK(rows[0].gap == doctest::Approx(-0.005).epsilon(1e-12));
}

TEST_CASE("taylor gap: identical parameters give exact zero") {
  auto online = scalar_model(1.3, 0.4);
  auto batch = scalar_batch(0.7, -1.0);
  auto rows = scoring::taylor_gap(online, online, batch, nn::LossKind::Mse);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].exact == 0.0);
  CHECK(rows[0].approx == 0.0);
  CHECK(rows[0].gap == 0.0);
}

TEST_CASE("taylor gap shrinks quadratically in the parameter offset") {
  Rng rng(41);
  nn::ModelSpec spec;
  spec.layer_widths = {6, 8};
  spec.out_dim = 4;
  auto online = nn::init_params(spec, 11);
  auto batch = random_class_batch(6, 4, 16, rng);
  auto grad = nn::backward(online, batch, nn::LossKind::CrossEntropy, 0.0);

  std::vector<double> lambdas = {1e-1, 1e-2, 1e-3, 1e-4};
  std::vector<double> log_lambda, log_gap;
  for (double lambda : lambdas) {
    nn::ModelParams reference = online;
    nn::param_axpy(reference, grad, -lambda);  // theta* = theta - lambda grad
    auto rows = scoring::taylor_gap(online, reference, batch,
                                    nn::LossKind::CrossEntropy);
    double mean_abs = 0.0;
    for (const auto& r : rows) mean_abs += std::fabs(r.gap);
    mean_abs /= static_cast<double>(rows.size());
    log_lambda.push_back(std::log(lambda));
    log_gap.push_back(std::log(mean_abs));
  }
  // least-squares slope of log|gap| vs log lambda
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    mx += log_lambda[i];
    my += log_gap[i];
  }
  mx /= lambdas.size();
  my /= lambdas.size();
  double num = 0, den = 0;
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    num += (log_lambda[i] - mx) * (log_gap[i] - my);
    den += (log_lambda[i] - mx) * (log_lambda[i] - mx);
  }
  const double slope = num / den;
  CHECK(slope > 1.9);
  CHECK(slope < 2.1);
}

TEST_CASE("batch alignment diagnostic equals lambda * g_i . g_batch") {
  Rng rng(42);
  nn::ModelSpec spec;
  spec.layer_widths = {5, 7};
  spec.out_dim = 3;
  auto params = nn::init_params(spec, 13);
  auto batch = random_class_batch(5, 3, 8, rng);

  nn::Batch example;
  example.features = Tensor::matrix(1, 5);
  for (double& x : example.features.data) x = rng.next_normal();
  example.labels = {1};

  const double lambda = 0.02;
  const double got = scoring::batch_alignment_diagnostic(
      params, example, batch, lambda, nn::LossKind::CrossEntropy);

  auto g_example =
      nn::backward(params, example, nn::LossKind::CrossEntropy, 0.0);
  auto g_batch = nn::backward(params, batch, nn::LossKind::CrossEntropy, 0.0);
  const double expected = lambda * nn::param_dot(g_example, g_batch);
  CHECK(got == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("gradient-norm scores equal per-example squared gradient norms") {
  Rng rng(43);
  nn::ModelSpec spec;
  spec.layer_widths = {4, 6};
  spec.out_dim = 3;
  auto params = nn::init_params(spec, 17);
  auto batch = random_class_batch(4, 3, 5, rng);
  auto scores = scoring::score_gradnorm(params, batch);
  auto norms =
      nn::per_example_grad_sqnorm(params, batch, nn::LossKind::CrossEntropy);
  REQUIRE(scores.size() == norms.size());
  for (std::size_t i = 0; i < scores.size(); ++i)
    CHECK(scores[i] == doctest::Approx(norms[i]).epsilon(1e-12));
}

TEST_CASE("1-D quadratic: hard score is proportional to (theta - x)^2") {
  // loss = 1/2 (theta - x)^2 with unit input; score_hard returns the loss.
  auto model = scalar_model(3.0, 0.0);
  for (double x : {1.0, 2.0, 5.0}) {
    auto batch = scalar_batch(1.0, x);
    auto losses = nn::per_example_losses(model, batch, nn::LossKind::Mse);
    auto s = scoring::score_hard(losses);
    CHECK(s[0] == doctest::Approx(0.5 * (3.0 - x) * (3.0 - x)).epsilon(1e-12));
  }
}
