#include "actsel/scoring.hpp"

#include <string>

namespace actsel::scoring {

const char* policy_name(Policy p) {
  switch (p) {
    case Policy::Uniform: return "uniform";
    case Policy::HardLearner: return "hard-learner";
    case Policy::EasyReference: return "easy-reference";
    case Policy::Learnability: return "learnability";
    case Policy::Rho: return "rho";
    case Policy::GradNorm: return "gradnorm";
  }
  return "?";
}

Policy policy_from_name(const std::string& name) {
  if (name == "uniform") return Policy::Uniform;
  if (name == "hard-learner" || name == "hard") return Policy::HardLearner;
  if (name == "easy-reference" || name == "easy") return Policy::EasyReference;
  if (name == "learnability") return Policy::Learnability;
  if (name == "rho") return Policy::Rho;
  if (name == "gradnorm") return Policy::GradNorm;
  throw ConfigError("unknown scoring policy: " + name);
}

std::vector<double> score_hard(const std::vector<double>& losses_learner) {
  return losses_learner;
}

std::vector<double> score_easy(const std::vector<double>& losses_reference) {
  std::vector<double> out(losses_reference.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -losses_reference[i];
  return out;
}

std::vector<double> score_learnability(
    const std::vector<double>& losses_online,
    const std::vector<double>& losses_reference) {
  if (losses_online.size() != losses_reference.size())
    throw ConfigError("learnability: loss vector lengths differ");
  std::vector<double> out(losses_online.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = losses_online[i] - losses_reference[i];
  return out;
}

std::vector<double> score_rho(const std::vector<double>& losses_learner,
                              const std::vector<double>& losses_reference) {
  return score_learnability(losses_learner, losses_reference);
}

std::vector<double> score_gradnorm(const nn::ModelParams& params_learner,
                                   const nn::Batch& batch, nn::LossKind kind,
                                   double smoothing) {
  return nn::per_example_grad_sqnorm(params_learner, batch, kind, smoothing);
}

std::vector<TaylorRow> taylor_gap(const nn::ModelParams& params_online,
                                  const nn::ModelParams& params_reference,
                                  const nn::Batch& batch, nn::LossKind kind,
                                  double smoothing) {
  if (!(params_online.spec == params_reference.spec))
    throw ConfigError("taylor_gap: model specs differ");
  const std::vector<double> l_on =
      nn::per_example_losses(params_online, batch, kind, smoothing);
  const std::vector<double> l_ref =
      nn::per_example_losses(params_reference, batch, kind, smoothing);
  const std::vector<double> th_on = nn::flatten_params(params_online);
  const std::vector<double> th_ref = nn::flatten_params(params_reference);
  const auto grads = nn::per_example_grads(params_online, batch, kind, smoothing);
  std::vector<TaylorRow> rows(l_on.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double approx = 0.0;
    for (std::size_t j = 0; j < th_on.size(); ++j)
      approx += (th_on[j] - th_ref[j]) * grads[i][j];
    rows[i] = {l_on[i] - l_ref[i], approx, l_on[i] - l_ref[i] - approx};
  }
  return rows;
}

double batch_alignment_diagnostic(const nn::ModelParams& params,
                                  const nn::Batch& example,
                                  const nn::Batch& batch, double lambda,
                                  nn::LossKind kind, double smoothing) {
  nn::ModelParams g_example = nn::backward(params, example, kind, smoothing);
  nn::ModelParams g_batch = nn::backward(params, batch, kind, smoothing);
  return lambda * nn::param_dot(g_example, g_batch);
}

}  // namespace actsel::scoring
