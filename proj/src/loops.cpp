#include "actsel/loops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "actsel/replay.hpp"
#include "actsel/rng.hpp"

namespace actsel::loops {

namespace {

// seed-stream roles
constexpr std::uint64_t kRoleData = 1;
constexpr std::uint64_t kRoleSelect = 2;
constexpr std::uint64_t kRoleLearnerInit = 3;
constexpr std::uint64_t kRoleOnlineInit = 4;
constexpr std::uint64_t kRoleRefInit = 5;
constexpr std::uint64_t kRoleRefData = 6;

Tensor gather_rows(const Tensor& src, const std::vector<std::size_t>& idx) {
  const std::size_t d = src.cols();
  Tensor out = Tensor::matrix(idx.size(), d);
  for (std::size_t i = 0; i < idx.size(); ++i)
    std::memcpy(out.row(i), src.row(idx[i]), d * sizeof(double));
  return out;
}

class ClassificationTask final : public Task {
 public:
  ClassificationTask(const data::LabeledDataset& train,
                     const data::LabeledDataset& holdout, double smoothing)
      : train_(train), holdout_(holdout), smoothing_(smoothing) {}

  std::size_t train_size() const override { return train_.size(); }

  Model init_model(const nn::ModelSpec& spec,
                   std::uint64_t seed) const override {
    Model m;
    m.a = nn::init_params(spec, seed);
    return m;
  }

  ModelOpt init_opt(const Model& m, double lr, double wd, long warmup,
                    long total) const override {
    ModelOpt opt;
    opt.a = nn::init_optimizer(m.a, lr, wd, warmup, total);
    return opt;
  }

  std::vector<double> scoring_losses(
      const Model& m, const std::vector<std::size_t>& idx) const override {
    Tensor x = gather_rows(train_.features, idx);
    std::vector<int> y(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) y[i] = train_.labels[idx[i]];
    return nn::cross_entropy_per_example(nn::forward(m.a, x), y, smoothing_);
  }

  std::vector<double> gradnorm_scores(
      const Model& m, const std::vector<std::size_t>& idx) const override {
    nn::Batch batch;
    batch.features = gather_rows(train_.features, idx);
    batch.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      batch.labels[i] = train_.labels[idx[i]];
    return nn::per_example_grad_sqnorm(m.a, batch, nn::LossKind::CrossEntropy,
                                       smoothing_);
  }

  double update(Model& m, ModelOpt& opt, const std::vector<std::size_t>& idx,
                double lr_scale) const override {
    nn::Batch batch;
    batch.features = gather_rows(train_.features, idx);
    batch.labels.resize(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
      batch.labels[i] = train_.labels[idx[i]];
    const auto losses = nn::per_example_losses(
        m.a, batch, nn::LossKind::CrossEntropy, smoothing_);
    nn::ModelParams grads =
        nn::backward(m.a, batch, nn::LossKind::CrossEntropy, smoothing_);
    nn::adam_step(m.a, grads, opt.a, lr_scale);
    double mean = 0.0;
    for (double l : losses) mean += l;
    return mean / static_cast<double>(losses.size());
  }

  double evaluate(const Model& m) const override {
    return evaluate_classification(m.a, holdout_);
  }

  double noise_fraction(const std::vector<std::size_t>& idx) const override {
    if (idx.empty()) return 0.0;
    std::size_t noisy = 0;
    for (std::size_t i : idx) noisy += train_.noise_mask[i] ? 1 : 0;
    return static_cast<double>(noisy) / static_cast<double>(idx.size());
  }

 private:
  const data::LabeledDataset& train_;
  const data::LabeledDataset& holdout_;
  double smoothing_;
};

class ContrastiveTask final : public Task {
 public:
  ContrastiveTask(const data::PairedDataset& train,
                  const data::PairedDataset& holdout)
      : train_(train), holdout_(holdout) {}

  std::size_t train_size() const override { return train_.size(); }

  Model init_model(const nn::ModelSpec& spec,
                   std::uint64_t seed) const override {
    if (spec.head != nn::HeadKind::Encoder)
      throw ConfigError("contrastive task needs encoder-head models");
    Model m;
    m.two_tower = true;
    m.a = nn::init_params(spec, Rng::derive(seed, 11));
    m.b = nn::init_params(spec, Rng::derive(seed, 12));
    return m;
  }

  ModelOpt init_opt(const Model& m, double lr, double wd, long warmup,
                    long total) const override {
    ModelOpt opt;
    opt.a = nn::init_optimizer(m.a, lr, wd, warmup, total);
    opt.b = nn::init_optimizer(m.b, lr, wd, warmup, total);
    return opt;
  }

  std::vector<double> scoring_losses(
      const Model& m, const std::vector<std::size_t>& idx) const override {
    Tensor za = nn::forward(m.a, gather_rows(train_.view_a, idx));
    Tensor zb = nn::forward(m.b, gather_rows(train_.view_b, idx));
    // actor loss: negative dot-product similarity
    std::vector<double> out(idx.size());
    const std::size_t e = za.cols();
    for (std::size_t i = 0; i < idx.size(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < e; ++j) dot += za.at(i, j) * zb.at(i, j);
      out[i] = -dot;
    }
    return out;
  }

  std::vector<double> gradnorm_scores(
      const Model&, const std::vector<std::size_t>&) const override {
    throw ConfigError("gradnorm policy is classification-only");
  }

  double update(Model& m, ModelOpt& opt, const std::vector<std::size_t>& idx,
                double lr_scale) const override {
    Tensor xa = gather_rows(train_.view_a, idx);
    Tensor xb = gather_rows(train_.view_b, idx);
    const auto losses =
        nn::contrastive_losses(nn::forward(m.a, xa), nn::forward(m.b, xb));
    auto [ga, gb] = nn::backward_contrastive(m.a, m.b, xa, xb);
    nn::adam_step(m.a, ga, opt.a, lr_scale);
    nn::adam_step(m.b, gb, opt.b, lr_scale);
    double mean = 0.0;
    for (double l : losses.learner) mean += l;
    return mean / static_cast<double>(losses.learner.size());
  }

  double evaluate(const Model& m) const override {
    return evaluate_retrieval_r1(m.a, m.b, holdout_);
  }

  double noise_fraction(const std::vector<std::size_t>& idx) const override {
    if (idx.empty()) return 0.0;
    std::size_t bad = 0;
    for (std::size_t i : idx) bad += train_.mismatch_mask[i] ? 1 : 0;
    return static_cast<double>(bad) / static_cast<double>(idx.size());
  }

 private:
  const data::PairedDataset& train_;
  const data::PairedDataset& holdout_;
};

double scoring_cost_per_example(const LoopConfig& cfg) {
  switch (cfg.policy) {
    case scoring::Policy::Uniform: return 0.0;
    case scoring::Policy::HardLearner: return cfg.f_learn;
    case scoring::Policy::EasyReference: return cfg.f_proxy;
    case scoring::Policy::Learnability: return 2.0 * cfg.f_proxy;
    case scoring::Policy::Rho: return cfg.f_learn + cfg.f_proxy;
    case scoring::Policy::GradNorm: return cfg.cost_ratio * cfg.f_learn;
  }
  return 0.0;
}

bool policy_uses_online(scoring::Policy p) {
  return p == scoring::Policy::Learnability;
}

bool policy_uses_reference(scoring::Policy p) {
  return p == scoring::Policy::EasyReference ||
         p == scoring::Policy::Learnability || p == scoring::Policy::Rho;
}

long warmup_steps_for(const LoopConfig& cfg) {
  return std::lround(cfg.warmup_frac * static_cast<double>(cfg.steps));
}

struct Driver {
  const LoopConfig& cfg;
  const Task& task;
  RunResult result;
  double noise_acc = 0.0;
  double loss_acc = 0.0;
  std::size_t acc_count = 0;

  Driver(const LoopConfig& c, const Task& t) : cfg(c), task(t) {}

  void record_step(const std::vector<std::size_t>& sel, double loss) {
    const double nf = task.noise_fraction(sel);
    result.selected.push_back(sel);
    result.step_noise_frac.push_back(nf);
    noise_acc += nf;
    loss_acc += loss;
    ++acc_count;
  }

  void maybe_eval(const Model& learner, std::size_t step_done,
                  double learner_per, double actor_per, double ref_per,
                  double ref_const, bool force = false) {
    if (!force && step_done % cfg.eval_every != 0) return;
    MetricsRow row;
    row.step = static_cast<long>(step_done);
    row.metric = task.evaluate(learner);
    row.loss = acc_count ? loss_acc / static_cast<double>(acc_count) : 0.0;
    row.sel_noise_frac =
        acc_count ? noise_acc / static_cast<double>(acc_count) : 0.0;
    const double n = static_cast<double>(step_done);
    row.cum_flops_learner = learner_per * n;
    row.cum_flops_actor = actor_per * n;
    row.cum_flops_ref = ref_const + ref_per * n;
    result.rows.push_back(row);
    noise_acc = loss_acc = 0.0;
    acc_count = 0;
  }
};

std::vector<std::size_t> draw_uniform(Rng& rng, std::size_t n,
                                      std::size_t count) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i)
    idx[i] = static_cast<std::size_t>(rng.next_below(n));
  return idx;
}

}  // namespace

std::vector<double> policy_scores(const LoopConfig& cfg, const Task& task,
                                  const Model& learner, const Model* online,
                                  const Model* reference,
                                  const std::vector<std::size_t>& idx) {
  switch (cfg.policy) {
    case scoring::Policy::Uniform:
      return std::vector<double>(idx.size(), 0.0);
    case scoring::Policy::HardLearner:
      return scoring::score_hard(task.scoring_losses(learner, idx));
    case scoring::Policy::EasyReference:
      return scoring::score_easy(task.scoring_losses(*reference, idx));
    case scoring::Policy::Learnability:
      return scoring::score_learnability(task.scoring_losses(*online, idx),
                                         task.scoring_losses(*reference, idx));
    case scoring::Policy::Rho:
      return scoring::score_rho(task.scoring_losses(learner, idx),
                                task.scoring_losses(*reference, idx));
    case scoring::Policy::GradNorm:
      return task.gradnorm_scores(learner, idx);
  }
  return {};
}

namespace {

RunResult drive_selection(const LoopConfig& cfg, const Task& task,
                          const Model* pretrained_ref,
                          double ref_pretrain_gflops, bool online_reference) {
  cfg.validate();
  Rng data_rng(Rng::derive(cfg.seed, kRoleData));
  Rng select_rng(Rng::derive(cfg.seed, kRoleSelect));
  const long warmup = warmup_steps_for(cfg);

  Model learner = task.init_model(cfg.learner_spec,
                                  Rng::derive(cfg.seed, kRoleLearnerInit));
  ModelOpt learner_opt =
      task.init_opt(learner, cfg.base_lr, cfg.weight_decay, warmup,
                    static_cast<long>(cfg.steps));

  Model online, reference;
  ModelOpt online_opt, reference_opt;
  const bool use_online = policy_uses_online(cfg.policy);
  const bool use_ref = policy_uses_reference(cfg.policy);
  if (use_online) {
    const std::uint64_t role =
        cfg.share_online_init ? kRoleRefInit : kRoleOnlineInit;
    online = task.init_model(cfg.proxy_spec, Rng::derive(cfg.seed, role));
    online_opt = task.init_opt(online, cfg.base_lr, cfg.weight_decay, warmup,
                               static_cast<long>(cfg.steps));
  }
  if (use_ref) {
    if (online_reference) {
      reference =
          task.init_model(cfg.proxy_spec, Rng::derive(cfg.seed, kRoleRefInit));
      reference_opt =
          task.init_opt(reference, cfg.base_lr, cfg.weight_decay, warmup,
                        static_cast<long>(cfg.steps));
    } else {
      if (!pretrained_ref)
        throw ConfigError("selection loop: policy needs a reference model");
      reference = *pretrained_ref;
    }
  }

  replay::MemoryBank bank(cfg.big_b, cfg.temperature);

  // exact per-step ledger increments
  const double learner_per =
      cfg.cost_ratio * cfg.f_learn * static_cast<double>(cfg.b);
  const double actor_per =
      scoring_cost_per_example(cfg) * static_cast<double>(cfg.big_b) +
      (use_online ? cfg.cost_ratio * cfg.f_proxy * static_cast<double>(cfg.b)
                  : 0.0);
  const double ref_per =
      online_reference
          ? cfg.cost_ratio * cfg.f_proxy * static_cast<double>(cfg.big_b)
          : 0.0;
  const double ref_const = online_reference ? 0.0 : ref_pretrain_gflops;

  Driver drv(cfg, task);
  drv.maybe_eval(learner, 0, learner_per, actor_per, ref_per, ref_const, true);

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::vector<std::size_t> super =
        draw_uniform(data_rng, task.train_size(), cfg.big_b);
    std::vector<std::size_t> sub;
    if (cfg.policy == scoring::Policy::Uniform && cfg.b == cfg.big_b) {
      sub = super;  // degenerate filter, no selection randomness consumed
    } else {
      const std::vector<double> scores = policy_scores(
          cfg, task, learner, use_online ? &online : nullptr,
          use_ref ? &reference : nullptr, super);
      if (online_reference)
        task.update(reference, reference_opt, super, cfg.ref_lr_scale);
      std::vector<replay::ScoredEntry> entries(cfg.big_b);
      const std::uint64_t base_id = static_cast<std::uint64_t>(step) * cfg.big_b;
      for (std::size_t j = 0; j < cfg.big_b; ++j)
        entries[j] = {base_id + j, scores[j], 0, false};
      bank.insert(entries);
      const std::vector<std::uint64_t> ids =
          bank.sample_prioritized(cfg.b, select_rng);
      bank.clear_live();
      sub.reserve(cfg.b);
      for (std::uint64_t id : ids) sub.push_back(super[id - base_id]);
    }

    const double loss = task.update(learner, learner_opt, sub, 1.0);
    if (use_online) task.update(online, online_opt, sub, 1.0);

    drv.record_step(sub, loss);
    drv.maybe_eval(learner, step + 1, learner_per, actor_per, ref_per,
                   ref_const, step + 1 == cfg.steps);
  }
  drv.result.learner = std::move(learner);
  drv.result.total_steps = static_cast<long>(cfg.steps);
  return std::move(drv.result);
}

}  // namespace

void LoopConfig::validate() const {
  learner_spec.validate();
  proxy_spec.validate();
  if (b == 0 || big_b == 0) throw ConfigError("loop: batch sizes must be > 0");
  if (b > big_b) throw ConfigError("loop: b must be <= B");
  if (steps == 0) throw ConfigError("loop: steps must be > 0");
  if (eval_every == 0) throw ConfigError("loop: eval_every must be > 0");
  if (temperature <= 0.0) throw ConfigError("loop: temperature must be > 0");
  if (f_learn <= 0.0 || f_proxy <= 0.0)
    throw ConfigError("loop: ledger F values must be > 0");
}

std::unique_ptr<Task> make_classification_task(
    const data::LabeledDataset& train, const data::LabeledDataset& holdout,
    double label_smoothing) {
  return std::make_unique<ClassificationTask>(train, holdout, label_smoothing);
}

std::unique_ptr<Task> make_contrastive_task(const data::PairedDataset& train,
                                            const data::PairedDataset& holdout) {
  return std::make_unique<ContrastiveTask>(train, holdout);
}

Model pretrain_reference(const LoopConfig& cfg, const Task& task,
                         double* out_gflops) {
  const std::size_t steps =
      cfg.ref_pretrain_steps ? cfg.ref_pretrain_steps : cfg.steps;
  const double lr = cfg.ref_pretrain_lr > 0.0 ? cfg.ref_pretrain_lr : cfg.base_lr;
  Model ref =
      task.init_model(cfg.proxy_spec, Rng::derive(cfg.seed, kRoleRefInit));
  ModelOpt opt = task.init_opt(
      ref, lr, cfg.weight_decay,
      std::lround(cfg.warmup_frac * static_cast<double>(steps)),
      static_cast<long>(steps));
  Rng data_rng(Rng::derive(cfg.seed, kRoleRefData));
  for (std::size_t step = 0; step < steps; ++step)
    task.update(ref, opt, draw_uniform(data_rng, task.train_size(), cfg.b),
                1.0);
  if (out_gflops)
    *out_gflops += cfg.cost_ratio * cfg.f_proxy * static_cast<double>(cfg.b) *
                   static_cast<double>(steps);
  return ref;
}

RunResult run_uniform(const LoopConfig& cfg, const Task& task) {
  cfg.validate();
  Rng data_rng(Rng::derive(cfg.seed, kRoleData));
  const long warmup = warmup_steps_for(cfg);
  Model learner = task.init_model(cfg.learner_spec,
                                  Rng::derive(cfg.seed, kRoleLearnerInit));
  ModelOpt opt = task.init_opt(learner, cfg.base_lr, cfg.weight_decay, warmup,
                               static_cast<long>(cfg.steps));
  const double learner_per =
      cfg.cost_ratio * cfg.f_learn * static_cast<double>(cfg.b);

  Driver drv(cfg, task);
  drv.maybe_eval(learner, 0, learner_per, 0.0, 0.0, 0.0, true);
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    const std::vector<std::size_t> batch =
        draw_uniform(data_rng, task.train_size(), cfg.b);
    const double loss = task.update(learner, opt, batch, 1.0);
    drv.record_step(batch, loss);
    drv.maybe_eval(learner, step + 1, learner_per, 0.0, 0.0, 0.0,
                   step + 1 == cfg.steps);
  }
  drv.result.learner = std::move(learner);
  drv.result.total_steps = static_cast<long>(cfg.steps);
  return std::move(drv.result);
}

RunResult run_algorithm1(const LoopConfig& cfg, const Task& task,
                         const Model& reference, double ref_pretrain_gflops) {
  return drive_selection(cfg, task, &reference, ref_pretrain_gflops, false);
}

RunResult run_algorithm2(const LoopConfig& cfg, const Task& task) {
  return drive_selection(cfg, task, nullptr, 0.0, true);
}

Model replay_selected(const LoopConfig& cfg, const Task& task,
                      const std::vector<std::vector<std::size_t>>& selected) {
  const long warmup = warmup_steps_for(cfg);
  Model learner = task.init_model(cfg.learner_spec,
                                  Rng::derive(cfg.seed, kRoleLearnerInit));
  ModelOpt opt = task.init_opt(learner, cfg.base_lr, cfg.weight_decay, warmup,
                               static_cast<long>(cfg.steps));
  for (const auto& sel : selected) task.update(learner, opt, sel, 1.0);
  return learner;
}

double evaluate_classification(const nn::ModelParams& params,
                               const data::LabeledDataset& holdout) {
  Tensor logits = nn::forward(params, holdout.features);
  std::size_t correct = 0;
  const std::size_t k = logits.cols();
  for (std::size_t i = 0; i < holdout.size(); ++i) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < k; ++j)
      if (logits.at(i, j) > logits.at(i, best)) best = j;
    correct += static_cast<int>(best) == holdout.labels[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(holdout.size());
}

double evaluate_retrieval_r1(const nn::ModelParams& im_tower,
                             const nn::ModelParams& txt_tower,
                             const data::PairedDataset& holdout) {
  Tensor za = nn::forward(im_tower, holdout.view_a);
  Tensor zb = nn::forward(txt_tower, holdout.view_b);
  const std::size_t n = za.rows();
  const std::size_t e = za.cols();
  std::size_t hits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double best = -1e300;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < e; ++c) dot += za.at(i, c) * zb.at(j, c);
      if (dot > best) {
        best = dot;
        best_j = j;
      }
    }
    hits += best_j == i ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

SpeedupResult speedup_beta(const RunResult& active, const RunResult& baseline,
                           int smooth_window) {
  SpeedupResult out;
  if (baseline.rows.empty() || active.rows.empty()) return out;
  const std::size_t w = std::min<std::size_t>(
      static_cast<std::size_t>(smooth_window), baseline.rows.size());
  double target = 0.0;
  for (std::size_t i = baseline.rows.size() - w; i < baseline.rows.size(); ++i)
    target += baseline.rows[i].metric;
  target /= static_cast<double>(w);
  out.target = target;
  for (const MetricsRow& row : active.rows) {
    if (row.metric >= target) {
      out.reached = true;
      out.crossing_step = row.step;
      break;
    }
  }
  if (out.reached) {
    out.beta = static_cast<double>(out.crossing_step) /
               static_cast<double>(baseline.total_steps);
    out.speedup_pct = 100.0 * (1.0 - out.beta);
  }
  return out;
}

}  // namespace actsel::loops
