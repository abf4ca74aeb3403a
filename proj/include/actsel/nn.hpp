#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "actsel/tensor.hpp"

namespace actsel::nn {

enum class Activation { Tanh, Relu };
enum class HeadKind { Classifier, Encoder };

// Dense network: layer_widths[0] is the input width, the remaining entries
// are hidden widths; a final linear layer maps to out_dim (K classes for a
// classifier head, embedding dim for an encoder head whose rows are
// L2-normalized).
struct ModelSpec {
  std::vector<int> layer_widths;
  Activation activation = Activation::Relu;
  HeadKind head = HeadKind::Classifier;
  int out_dim = 2;

  bool operator==(const ModelSpec&) const = default;
  int input_width() const { return layer_widths.front(); }
  std::size_t n_layers() const { return layer_widths.size(); }
  void validate() const;  // throws ConfigError
};

struct ModelParams {
  ModelSpec spec;
  std::vector<Tensor> weights;  // weights[l]: (in_l, out_l)
  std::vector<Tensor> biases;   // biases[l]: (out_l)
};

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed);
ModelParams zeros_like(const ModelParams& p);
std::size_t param_count(const ModelParams& p);
std::vector<double> flatten_params(const ModelParams& p);
double param_dot(const ModelParams& a, const ModelParams& b);
double grad_sqnorm(const ModelParams& g);
// a += scale * b
void param_axpy(ModelParams& a, const ModelParams& b, double scale);

Tensor forward(const ModelParams& params, const Tensor& batch);

std::vector<double> cross_entropy_per_example(const Tensor& logits,
                                              const std::vector<int>& labels,
                                              double smoothing);

std::vector<double> mse_per_example(const Tensor& out, const Tensor& targets);

struct ContrastiveLosses {
  std::vector<double> learner;  // symmetric InfoNCE, im->txt + txt->im
  std::vector<double> actor;    // -z_im . z_txt
};
ContrastiveLosses contrastive_losses(const Tensor& z_im, const Tensor& z_txt);

enum class LossKind { CrossEntropy, Mse };

struct Batch {
  Tensor features;
  std::vector<int> labels;  // CrossEntropy
  Tensor targets;           // Mse
};

std::vector<double> per_example_losses(const ModelParams& params,
                                       const Batch& batch, LossKind kind,
                                       double smoothing = 0.0);

// Gradient of the mean loss over the batch.
ModelParams backward(const ModelParams& params, const Batch& batch,
                     LossKind kind, double smoothing = 0.0);

// Gradient of the mean symmetric contrastive learner loss w.r.t. both towers.
std::pair<ModelParams, ModelParams> backward_contrastive(
    const ModelParams& im_tower, const ModelParams& txt_tower,
    const Tensor& view_a, const Tensor& view_b);

// Squared L2 norm of each example's own-loss gradient.
std::vector<double> per_example_grad_sqnorm(const ModelParams& params,
                                            const Batch& batch, LossKind kind,
                                            double smoothing = 0.0);

// Per-example gradients as flat vectors (diagnostics only; O(n * params)).
std::vector<std::vector<double>> per_example_grads(const ModelParams& params,
                                                   const Batch& batch,
                                                   LossKind kind,
                                                   double smoothing = 0.0);

struct OptimizerState {
  std::vector<Tensor> m_w, v_w, m_b, v_b;
  long step = 0;
  double base_lr = 1e-3;
  double weight_decay = 0.0;
  long warmup_steps = 0;
  long total_steps = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

OptimizerState init_optimizer(const ModelParams& params, double base_lr,
                              double weight_decay, long warmup_steps,
                              long total_steps);

// Linear warmup to 1 at warmup_steps, then cosine decay to 0 at total_steps.
double lr_schedule(const OptimizerState& state, long step);

// Decoupled-weight-decay Adam; effective lr = schedule(step)*base_lr*lr_scale.
void adam_step(ModelParams& params, const ModelParams& grads,
               OptimizerState& state, double lr_scale = 1.0);

}  // namespace actsel::nn
