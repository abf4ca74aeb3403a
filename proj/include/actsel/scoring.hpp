#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actsel/nn.hpp"

namespace actsel::scoring {

enum class Policy { Uniform, HardLearner, EasyReference, Learnability, Rho, GradNorm };

const char* policy_name(Policy p);
Policy policy_from_name(const std::string& name);  // throws ConfigError

// s_i = loss under the scoring model (hard examples first).
std::vector<double> score_hard(const std::vector<double>& losses_learner);

// s_i = -loss under the reference model (clean examples first).
std::vector<double> score_easy(const std::vector<double>& losses_reference);

// s_i = loss(online) - loss(reference).
std::vector<double> score_learnability(
    const std::vector<double>& losses_online,
    const std::vector<double>& losses_reference);

// Same arithmetic with the learner supplying the first term; cost attribution
// differs (F_act = F_learn + F_ref in the ledger).
std::vector<double> score_rho(const std::vector<double>& losses_learner,
                              const std::vector<double>& losses_reference);

// Per-example squared gradient norm under the learner.
std::vector<double> score_gradnorm(const nn::ModelParams& params_learner,
                                   const nn::Batch& batch,
                                   nn::LossKind kind = nn::LossKind::CrossEntropy,
                                   double smoothing = 0.0);

struct TaylorRow {
  double exact;   // loss(online) - loss(reference)
  double approx;  // (theta_online - theta_ref) . grad loss(online)
  double gap;     // exact - approx
};

// First-order expansion of the learnability score around the online params.
std::vector<TaylorRow> taylor_gap(const nn::ModelParams& params_online,
                                  const nn::ModelParams& params_reference,
                                  const nn::Batch& batch,
                                  nn::LossKind kind = nn::LossKind::CrossEntropy,
                                  double smoothing = 0.0);

// lambda * grad loss(example) . grad loss(batch mean)
double batch_alignment_diagnostic(const nn::ModelParams& params,
                                  const nn::Batch& example,
                                  const nn::Batch& batch, double lambda,
                                  nn::LossKind kind = nn::LossKind::CrossEntropy,
                                  double smoothing = 0.0);

}  // namespace actsel::scoring
