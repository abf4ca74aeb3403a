#include "actsel/nn.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numbers>
#include <string>

#include "actsel/kernels.hpp"
#include "actsel/rng.hpp"

namespace actsel::nn {

namespace {

int layer_out_width(const ModelSpec& spec, std::size_t l) {
  return l + 1 < spec.n_layers() ? spec.layer_widths[l + 1] : spec.out_dim;
}

struct ForwardCache {
  std::vector<Tensor> pre;   // pre-activation per layer, n x out_l
  std::vector<Tensor> post;  // input of each layer, post[0] == x
  Tensor out;                // post-head output
  std::vector<double> norms;  // encoder pre-normalization row norms
};

ForwardCache forward_cached(const ModelParams& params, const Tensor& x) {
  const ModelSpec& spec = params.spec;
  const std::size_t n = x.rows();
  if (static_cast<int>(x.cols()) != spec.input_width())
    throw ConfigError("forward: batch width " + std::to_string(x.cols()) +
                      " does not match model input width " +
                      std::to_string(spec.input_width()));
  ForwardCache cache;
  cache.post.push_back(x);
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const std::size_t in_w = cache.post.back().cols();
    const std::size_t out_w = static_cast<std::size_t>(layer_out_width(spec, l));
    Tensor pre = Tensor::matrix(n, out_w);
    kernels::matmul(cache.post.back().data.data(),
                    params.weights[l].data.data(), pre.data.data(), n, in_w,
                    out_w);
    kernels::add_bias_rows(pre.data.data(), params.biases[l].data.data(), n,
                           out_w);
    cache.pre.push_back(pre);
    if (l + 1 < spec.n_layers()) {
      Tensor post = Tensor::matrix(n, out_w);
      if (spec.activation == Activation::Tanh)
        kernels::tanh_forward(pre.data.data(), post.data.data(), pre.size());
      else
        kernels::relu_forward(pre.data.data(), post.data.data(), pre.size());
      cache.post.push_back(std::move(post));
    }
  }
  cache.out = cache.pre.back();
  if (spec.head == HeadKind::Encoder) {
    cache.norms.resize(n);
    kernels::l2_normalize_rows(cache.out.data.data(), cache.norms.data(), n,
                               cache.out.cols());
  }
  return cache;
}

// Backprop from d(mean loss)/d(final linear output) through all layers.
ModelParams backprop(const ModelParams& params, const ForwardCache& cache,
                     Tensor delta) {
  const ModelSpec& spec = params.spec;
  const std::size_t n = delta.rows();
  ModelParams grads = zeros_like(params);
  for (std::size_t li = spec.n_layers(); li-- > 0;) {
    const Tensor& input = cache.post[li];
    const std::size_t in_w = input.cols();
    const std::size_t out_w = delta.cols();
    kernels::matmul_at_b(input.data.data(), delta.data.data(),
                         grads.weights[li].data.data(), n, in_w, out_w);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < out_w; ++j)
        grads.biases[li].data[j] += delta.at(i, j);
    if (li == 0) break;
    Tensor d_input = Tensor::matrix(n, in_w);
    kernels::matmul_a_bt(delta.data.data(), params.weights[li].data.data(),
                         d_input.data.data(), n, out_w, in_w);
    // through the activation of layer li-1
    const Tensor& pre = cache.pre[li - 1];
    Tensor d_pre = Tensor::matrix(n, in_w);
    if (spec.activation == Activation::Tanh)
      kernels::tanh_backward(pre.data.data(), d_input.data.data(),
                             d_pre.data.data(), pre.size());
    else
      kernels::relu_backward(pre.data.data(), d_input.data.data(),
                             d_pre.data.data(), pre.size());
    delta = std::move(d_pre);
  }
  return grads;
}

// Converts d loss / d z (normalized rows) into d loss / d h (pre-norm).
Tensor encoder_head_backward(const ForwardCache& cache, const Tensor& d_z) {
  const std::size_t n = d_z.rows();
  const std::size_t m = d_z.cols();
  Tensor d_h = Tensor::matrix(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    const double nrm = cache.norms[i];
    if (nrm <= 0.0) continue;
    const double* z = cache.out.row(i);
    const double* g = d_z.row(i);
    double gz = 0.0;
    for (std::size_t j = 0; j < m; ++j) gz += g[j] * z[j];
    for (std::size_t j = 0; j < m; ++j) d_h.at(i, j) = (g[j] - gz * z[j]) / nrm;
  }
  return d_h;
}

// d(mean CE)/d(logits) = (softmax - smoothed_target) / n
Tensor cross_entropy_delta(const Tensor& logits, const std::vector<int>& labels,
                           double smoothing) {
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  Tensor delta = Tensor::matrix(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.row(i);
    double mx = row[0];
    for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, row[j]);
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    for (std::size_t j = 0; j < k; ++j) {
      double q = smoothing / static_cast<double>(k);
      if (static_cast<int>(j) == labels[i]) q += 1.0 - smoothing;
      delta.at(i, j) = (std::exp(row[j] - mx) / z - q) / static_cast<double>(n);
    }
  }
  return delta;
}

Tensor mse_delta(const Tensor& out, const Tensor& targets) {
  const std::size_t n = out.rows();
  Tensor delta = Tensor::matrix(n, out.cols());
  for (std::size_t i = 0; i < out.size(); ++i)
    delta.data[i] = (out.data[i] - targets.data[i]) / static_cast<double>(n);
  return delta;
}

Batch single_example(const Batch& batch, std::size_t i) {
  Batch one;
  const std::size_t d = batch.features.cols();
  one.features = Tensor::matrix(1, d);
  std::memcpy(one.features.data.data(), batch.features.row(i),
              d * sizeof(double));
  if (!batch.labels.empty()) one.labels = {batch.labels[i]};
  if (!batch.targets.data.empty()) {
    const std::size_t t = batch.targets.cols();
    one.targets = Tensor::matrix(1, t);
    std::memcpy(one.targets.data.data(), batch.targets.row(i),
                t * sizeof(double));
  }
  return one;
}

}  // namespace

void ModelSpec::validate() const {
  if (layer_widths.empty()) throw ConfigError("model: needs at least 1 layer");
  for (int w : layer_widths)
    if (w <= 0) throw ConfigError("model: layer widths must be positive");
  if (head == HeadKind::Classifier && out_dim < 2)
    throw ConfigError("model: classifier needs K >= 2");
  if (head == HeadKind::Encoder && out_dim < 1)
    throw ConfigError("model: encoder needs embed_dim >= 1");
}

ModelParams init_params(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  ModelParams p;
  p.spec = spec;
  for (std::size_t l = 0; l < spec.n_layers(); ++l) {
    const auto in_w = static_cast<std::size_t>(spec.layer_widths[l]);
    const auto out_w = static_cast<std::size_t>(layer_out_width(spec, l));
    Tensor w = Tensor::matrix(in_w, out_w);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_w));
    for (double& v : w.data) v = (2.0 * rng.next_double() - 1.0) * scale;
    p.weights.push_back(std::move(w));
    p.biases.push_back(Tensor({out_w}));
  }
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams z;
  z.spec = p.spec;
  for (const Tensor& w : p.weights) z.weights.push_back(Tensor(w.shape));
  for (const Tensor& b : p.biases) z.biases.push_back(Tensor(b.shape));
  return z;
}

std::size_t param_count(const ModelParams& p) {
  std::size_t n = 0;
  for (const Tensor& w : p.weights) n += w.size();
  for (const Tensor& b : p.biases) n += b.size();
  return n;
}

std::vector<double> flatten_params(const ModelParams& p) {
  std::vector<double> out;
  out.reserve(param_count(p));
  for (const Tensor& w : p.weights) out.insert(out.end(), w.data.begin(), w.data.end());
  for (const Tensor& b : p.biases) out.insert(out.end(), b.data.begin(), b.data.end());
  return out;
}

double param_dot(const ModelParams& a, const ModelParams& b) {
  double acc = 0.0;
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    for (std::size_t i = 0; i < a.weights[l].size(); ++i)
      acc += a.weights[l].data[i] * b.weights[l].data[i];
    for (std::size_t i = 0; i < a.biases[l].size(); ++i)
      acc += a.biases[l].data[i] * b.biases[l].data[i];
  }
  return acc;
}

double grad_sqnorm(const ModelParams& g) { return param_dot(g, g); }

void param_axpy(ModelParams& a, const ModelParams& b, double scale) {
  for (std::size_t l = 0; l < a.weights.size(); ++l) {
    for (std::size_t i = 0; i < a.weights[l].size(); ++i)
      a.weights[l].data[i] += scale * b.weights[l].data[i];
    for (std::size_t i = 0; i < a.biases[l].size(); ++i)
      a.biases[l].data[i] += scale * b.biases[l].data[i];
  }
}

Tensor forward(const ModelParams& params, const Tensor& batch) {
  return forward_cached(params, batch).out;
}

std::vector<double> cross_entropy_per_example(const Tensor& logits,
                                              const std::vector<int>& labels,
                                              double smoothing) {
  if (smoothing < 0.0 || smoothing >= 1.0)
    throw ConfigError("cross_entropy: smoothing must be in [0,1)");
  const std::size_t n = logits.rows();
  const std::size_t k = logits.cols();
  if (labels.size() != n)
    throw ConfigError("cross_entropy: label count does not match batch");
  std::vector<double> losses(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double* row = logits.row(i);
    if (labels[i] < 0 || labels[i] >= static_cast<int>(k))
      throw ConfigError("cross_entropy: label out of range");
    double mx = row[0];
    for (std::size_t j = 0; j < k; ++j) {
      if (!std::isfinite(row[j]))
        throw NumericError("cross_entropy: non-finite logit");
      mx = std::max(mx, row[j]);
    }
    double z = 0.0;
    for (std::size_t j = 0; j < k; ++j) z += std::exp(row[j] - mx);
    const double logz = std::log(z) + mx;
    double loss = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      double q = smoothing / static_cast<double>(k);
      if (static_cast<int>(j) == labels[i]) q += 1.0 - smoothing;
      if (q > 0.0) loss -= q * (row[j] - logz);
    }
    losses[i] = loss;
  }
  return losses;
}

std::vector<double> mse_per_example(const Tensor& out, const Tensor& targets) {
  const std::size_t n = out.rows();
  const std::size_t m = out.cols();
  std::vector<double> losses(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double e = out.at(i, j) - targets.at(i, j);
      losses[i] += 0.5 * e * e;
    }
  return losses;
}

ContrastiveLosses contrastive_losses(const Tensor& z_im, const Tensor& z_txt) {
  const std::size_t n = z_im.rows();
  const std::size_t m = z_im.cols();
  if (z_txt.rows() != n || z_txt.cols() != m)
    throw ConfigError("contrastive: embedding shapes differ");
  ContrastiveLosses out;
  out.actor.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < m; ++j) dot += z_im.at(i, j) * z_txt.at(i, j);
    out.actor[i] = -dot;
  }
  if (n < 2)
    throw ConfigError("contrastive: learner loss needs batch size >= 2");
  Tensor sim = Tensor::matrix(n, n);
  kernels::matmul_a_bt(z_im.data.data(), z_txt.data.data(), sim.data.data(), n,
                       m, n);
  out.learner.resize(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    // im -> txt over row i
    double mx = sim.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, sim.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(sim.at(i, j) - mx);
    out.learner[i] += -(sim.at(i, i) - mx - std::log(z));
    // txt -> im over column i
    double mxc = sim.at(0, i);
    for (std::size_t j = 1; j < n; ++j) mxc = std::max(mxc, sim.at(j, i));
    double zc = 0.0;
    for (std::size_t j = 0; j < n; ++j) zc += std::exp(sim.at(j, i) - mxc);
    out.learner[i] += -(sim.at(i, i) - mxc - std::log(zc));
  }
  return out;
}

std::vector<double> per_example_losses(const ModelParams& params,
                                       const Batch& batch, LossKind kind,
                                       double smoothing) {
  Tensor out = forward(params, batch.features);
  if (kind == LossKind::CrossEntropy)
    return cross_entropy_per_example(out, batch.labels, smoothing);
  return mse_per_example(out, batch.targets);
}

ModelParams backward(const ModelParams& params, const Batch& batch,
                     LossKind kind, double smoothing) {
  ForwardCache cache = forward_cached(params, batch.features);
  Tensor delta = kind == LossKind::CrossEntropy
                     ? cross_entropy_delta(cache.out, batch.labels, smoothing)
                     : mse_delta(cache.out, batch.targets);
  if (params.spec.head == HeadKind::Encoder)
    delta = encoder_head_backward(cache, delta);
  return backprop(params, cache, std::move(delta));
}

std::pair<ModelParams, ModelParams> backward_contrastive(
    const ModelParams& im_tower, const ModelParams& txt_tower,
    const Tensor& view_a, const Tensor& view_b) {
  ForwardCache cache_im = forward_cached(im_tower, view_a);
  ForwardCache cache_txt = forward_cached(txt_tower, view_b);
  const Tensor& z_im = cache_im.out;
  const Tensor& z_txt = cache_txt.out;
  const std::size_t n = z_im.rows();
  const std::size_t m = z_im.cols();
  if (n < 2)
    throw ConfigError("contrastive: learner loss needs batch size >= 2");

  Tensor sim = Tensor::matrix(n, n);
  kernels::matmul_a_bt(z_im.data.data(), z_txt.data.data(), sim.data.data(), n,
                       m, n);
  // d(mean loss)/dS = (P_row + P_col - 2 I) / n
  Tensor g_sim = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = sim.at(i, 0);
    for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, sim.at(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(sim.at(i, j) - mx);
    for (std::size_t j = 0; j < n; ++j)
      g_sim.at(i, j) += std::exp(sim.at(i, j) - mx) / z;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double mx = sim.at(0, j);
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, sim.at(i, j));
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::exp(sim.at(i, j) - mx);
    for (std::size_t i = 0; i < n; ++i)
      g_sim.at(i, j) += std::exp(sim.at(i, j) - mx) / z;
  }
  for (std::size_t i = 0; i < n; ++i) g_sim.at(i, i) -= 2.0;
  for (double& v : g_sim.data) v /= static_cast<double>(n);

  Tensor d_zim = Tensor::matrix(n, m);
  kernels::matmul(g_sim.data.data(), z_txt.data.data(), d_zim.data.data(), n,
                  n, m);
  Tensor d_ztxt = Tensor::matrix(n, m);
  kernels::matmul_at_b(g_sim.data.data(), z_im.data.data(), d_ztxt.data.data(),
                       n, n, m);

  Tensor d_him = encoder_head_backward(cache_im, d_zim);
  Tensor d_htxt = encoder_head_backward(cache_txt, d_ztxt);
  return {backprop(im_tower, cache_im, std::move(d_him)),
          backprop(txt_tower, cache_txt, std::move(d_htxt))};
}

std::vector<double> per_example_grad_sqnorm(const ModelParams& params,
                                            const Batch& batch, LossKind kind,
                                            double smoothing) {
  const std::size_t n = batch.features.rows();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    ModelParams g = backward(params, single_example(batch, i), kind, smoothing);
    out[i] = grad_sqnorm(g);
  }
  return out;
}

std::vector<std::vector<double>> per_example_grads(const ModelParams& params,
                                                   const Batch& batch,
                                                   LossKind kind,
                                                   double smoothing) {
  const std::size_t n = batch.features.rows();
  std::vector<std::vector<double>> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = flatten_params(
        backward(params, single_example(batch, i), kind, smoothing));
  return out;
}

OptimizerState init_optimizer(const ModelParams& params, double base_lr,
                              double weight_decay, long warmup_steps,
                              long total_steps) {
  OptimizerState s;
  s.base_lr = base_lr;
  s.weight_decay = weight_decay;
  s.warmup_steps = warmup_steps;
  s.total_steps = total_steps;
  for (const Tensor& w : params.weights) {
    s.m_w.push_back(Tensor(w.shape));
    s.v_w.push_back(Tensor(w.shape));
  }
  for (const Tensor& b : params.biases) {
    s.m_b.push_back(Tensor(b.shape));
    s.v_b.push_back(Tensor(b.shape));
  }
  return s;
}

double lr_schedule(const OptimizerState& state, long step) {
  if (state.warmup_steps > 0 && step < state.warmup_steps)
    return static_cast<double>(step) / static_cast<double>(state.warmup_steps);
  if (state.total_steps <= state.warmup_steps) return 1.0;
  const double t = static_cast<double>(step - state.warmup_steps) /
                   static_cast<double>(state.total_steps - state.warmup_steps);
  return 0.5 * (1.0 + std::cos(std::numbers::pi * std::min(t, 1.0)));
}

namespace {
void adam_update_tensor(Tensor& p, const Tensor& g, Tensor& m, Tensor& v,
                        double lr, double wd, double b1, double b2, double eps,
                        double bc1, double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m.data[i] = b1 * m.data[i] + (1.0 - b1) * g.data[i];
    v.data[i] = b2 * v.data[i] + (1.0 - b2) * g.data[i] * g.data[i];
    const double mhat = m.data[i] / bc1;
    const double vhat = v.data[i] / bc2;
    p.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + wd * p.data[i]);
  }
}
}  // namespace

void adam_step(ModelParams& params, const ModelParams& grads,
               OptimizerState& state, double lr_scale) {
  const double lr = state.base_lr * lr_schedule(state, state.step) * lr_scale;
  const long t = state.step + 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    adam_update_tensor(params.weights[l], grads.weights[l], state.m_w[l],
                       state.v_w[l], lr, state.weight_decay, state.beta1,
                       state.beta2, state.eps, bc1, bc2);
    adam_update_tensor(params.biases[l], grads.biases[l], state.m_b[l],
                       state.v_b[l], lr, 0.0, state.beta1, state.beta2,
                       state.eps, bc1, bc2);
  }
  state.step = t;
}

}  // namespace actsel::nn
