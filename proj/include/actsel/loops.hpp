#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "actsel/data.hpp"
#include "actsel/nn.hpp"
#include "actsel/scoring.hpp"

namespace actsel::loops {

enum class ReferenceSource { Pretrained, OnlineOnePass, HeldOutPretrained };

// A trainable model: one net for classification, two encoder towers for the
// contrastive task.
struct Model {
  nn::ModelParams a;
  nn::ModelParams b;
  bool two_tower = false;
};

struct ModelOpt {
  nn::OptimizerState a;
  nn::OptimizerState b;
};

struct LoopConfig {
  nn::ModelSpec learner_spec;
  nn::ModelSpec proxy_spec;  // online and reference models
  std::size_t big_b = 64;    // super-batch B
  std::size_t b = 32;        // sub-batch
  std::size_t steps = 1000;
  std::size_t eval_every = 20;
  std::size_t ref_pretrain_steps = 0;  // 0: same as steps
  double ref_pretrain_lr = 0.0;        // 0: same as base_lr
  scoring::Policy policy = scoring::Policy::Learnability;
  ReferenceSource reference_source = ReferenceSource::Pretrained;
  double temperature = 1.0;
  double base_lr = 3e-3;
  double weight_decay = 1e-4;
  double warmup_frac = 0.01;
  double label_smoothing = 0.1;
  double ref_lr_scale = 2.0;  // one-pass online reference
  bool share_online_init = false;
  std::uint64_t seed = 0;
  // ledger entries (per-example inference GFLOPs)
  double f_learn = 17.6;
  double f_proxy = 1.3;
  double cost_ratio = 3.0;

  void validate() const;  // throws ConfigError naming the field
};

struct MetricsRow {
  long step = 0;
  double loss = 0.0;
  double metric = 0.0;           // holdout accuracy or R@1
  double sel_noise_frac = 0.0;   // mean over steps since last eval
  double cum_flops_learner = 0.0;
  double cum_flops_actor = 0.0;
  double cum_flops_ref = 0.0;
};

struct RunResult {
  std::vector<MetricsRow> rows;
  Model learner;
  std::vector<std::vector<std::size_t>> selected;  // dataset indices per step
  std::vector<double> step_noise_frac;             // per training step
  long total_steps = 0;
};

// Dataset-specific behavior shared by all loop drivers. Scoring and training
// never see the noise masks; only noise_fraction reads them.
class Task {
 public:
  virtual ~Task() = default;
  virtual std::size_t train_size() const = 0;
  virtual Model init_model(const nn::ModelSpec& spec,
                           std::uint64_t seed) const = 0;
  virtual ModelOpt init_opt(const Model& m, double lr, double wd, long warmup,
                            long total) const = 0;
  // Per-example scoring loss: cross-entropy for classification, negative
  // dot-product similarity for the contrastive task.
  virtual std::vector<double> scoring_losses(
      const Model& m, const std::vector<std::size_t>& idx) const = 0;
  virtual std::vector<double> gradnorm_scores(
      const Model& m, const std::vector<std::size_t>& idx) const = 0;
  // One optimizer step on the given examples; returns the mean learner loss.
  virtual double update(Model& m, ModelOpt& opt,
                        const std::vector<std::size_t>& idx,
                        double lr_scale) const = 0;
  virtual double evaluate(const Model& m) const = 0;
  virtual double noise_fraction(const std::vector<std::size_t>& idx) const = 0;
};

std::unique_ptr<Task> make_classification_task(
    const data::LabeledDataset& train, const data::LabeledDataset& holdout,
    double label_smoothing);
std::unique_ptr<Task> make_contrastive_task(const data::PairedDataset& train,
                                            const data::PairedDataset& holdout);

// Scores a candidate batch under the configured policy; online/reference may
// be null for policies that do not read them.
std::vector<double> policy_scores(const LoopConfig& cfg, const Task& task,
                                  const Model& learner, const Model* online,
                                  const Model* reference,
                                  const std::vector<std::size_t>& idx);

// Reference pretraining on uniform batches; adds its training cost to
// *out_gflops when non-null.
Model pretrain_reference(const LoopConfig& cfg, const Task& task,
                         double* out_gflops = nullptr);

RunResult run_uniform(const LoopConfig& cfg, const Task& task);

// Pretrained-reference selection loop (learnability and friends).
RunResult run_algorithm1(const LoopConfig& cfg, const Task& task,
                         const Model& reference,
                         double ref_pretrain_gflops = 0.0);

// One-pass variant: the reference is trained online on each super-batch.
RunResult run_algorithm2(const LoopConfig& cfg, const Task& task);

// Re-runs learner updates on logged indices without any scorers.
Model replay_selected(const LoopConfig& cfg, const Task& task,
                      const std::vector<std::vector<std::size_t>>& selected);

double evaluate_classification(const nn::ModelParams& params,
                               const data::LabeledDataset& holdout);
double evaluate_retrieval_r1(const nn::ModelParams& im_tower,
                             const nn::ModelParams& txt_tower,
                             const data::PairedDataset& holdout);

struct SpeedupResult {
  bool reached = false;
  double beta = 1.0;
  double speedup_pct = 0.0;  // 100 * (1 - beta)
  long crossing_step = -1;
  double target = 0.0;       // smoothed baseline final metric
};

// beta = first active step whose metric touches the baseline's final smoothed
// metric, divided by the baseline's total steps.
SpeedupResult speedup_beta(const RunResult& active, const RunResult& baseline,
                           int smooth_window = 5);

}  // namespace actsel::loops
