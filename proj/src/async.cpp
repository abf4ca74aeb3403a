#include "actsel/async.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <thread>
#include <unordered_set>

#include "actsel/replay.hpp"
#include "actsel/rng.hpp"

namespace actsel::async {

namespace {

using namespace std::chrono_literals;

constexpr std::uint64_t kRoleSelect = 2;
constexpr std::uint64_t kRoleLearnerInit = 3;
constexpr std::uint64_t kRoleOnlineInit = 4;
constexpr std::uint64_t kRoleScorerBase = 100;

struct Snapshot {
  loops::Model learner;
  loops::Model online;
  loops::Model reference;
  long version = 0;
};

struct Shared {
  replay::MemoryBank bank;
  replay::SpiController spi;
  std::mutex map_mu;
  std::vector<std::size_t> id_to_dataset;  // entry id == position
  std::mutex snap_mu;
  std::shared_ptr<const Snapshot> snapshot;
  std::atomic<bool> stop{false};
  std::atomic<bool> error{false};
  std::mutex err_mu;
  std::string error_message;

  Shared(std::size_t capacity, double temperature, double spi_target)
      : bank(capacity, temperature), spi(spi_target) {}

  std::shared_ptr<const Snapshot> read_snapshot() {
    std::lock_guard<std::mutex> lock(snap_mu);
    return snapshot;
  }
  void publish(std::shared_ptr<const Snapshot> snap) {
    std::lock_guard<std::mutex> lock(snap_mu);
    snapshot = std::move(snap);
  }
  void fail(const std::string& message) {
    {
      std::lock_guard<std::mutex> lock(err_mu);
      if (error_message.empty()) error_message = message;
    }
    error.store(true);
    stop.store(true);
  }
};

void scorer_worker(const loops::LoopConfig& cfg, const loops::Task& task,
                   Shared& shared, int worker_index,
                   std::size_t backlog_limit) {
  try {
    Rng data_rng(Rng::derive(cfg.seed, kRoleScorerBase +
                                           static_cast<std::uint64_t>(
                                               worker_index)));
    const bool use_online = cfg.policy == scoring::Policy::Learnability;
    const bool use_ref = use_online ||
                         cfg.policy == scoring::Policy::EasyReference ||
                         cfg.policy == scoring::Policy::Rho;
    while (!shared.stop.load()) {
      if (!shared.spi.admit_insert(shared.bank.inserted_total(),
                                   shared.bank.sampled_total(), cfg.big_b,
                                   backlog_limit)) {
        std::this_thread::sleep_for(200us);
        continue;
      }
      std::vector<std::size_t> super(cfg.big_b);
      for (std::size_t& s : super)
        s = static_cast<std::size_t>(data_rng.next_below(task.train_size()));
      auto snap = shared.read_snapshot();
      const std::vector<double> scores = loops::policy_scores(
          cfg, task, snap->learner, use_online ? &snap->online : nullptr,
          use_ref ? &snap->reference : nullptr, super);
      std::vector<replay::ScoredEntry> entries(cfg.big_b);
      {
        std::lock_guard<std::mutex> lock(shared.map_mu);
        const std::uint64_t base = shared.id_to_dataset.size();
        for (std::size_t j = 0; j < cfg.big_b; ++j) {
          shared.id_to_dataset.push_back(super[j]);
          entries[j] = {base + j, scores[j], 0, false};
        }
      }
      shared.bank.insert(entries);
    }
  } catch (const std::exception& e) {
    shared.fail(std::string("scorer worker: ") + e.what());
  }
}

}  // namespace

loops::RunResult run_async(const loops::LoopConfig& cfg,
                           const loops::Task& task,
                           const loops::Model& reference,
                           double ref_pretrain_gflops,
                           const config::PipelineTopology& topology,
                           AsyncAudit* audit) {
  cfg.validate();
  // Fully synchronous single-worker schedule: the per-super-batch pipeline
  // degenerates to the sequential loop, which is the normative reference.
  if (topology.n_workers == 1 &&
      topology.mode == replay::BankMode::PerSuperbatch &&
      topology.param_sync_interval == 1) {
    loops::RunResult result =
        loops::run_algorithm1(cfg, task, reference, ref_pretrain_gflops);
    if (audit) {
      audit->inserted_total = cfg.steps * cfg.big_b;
      audit->sampled_total = cfg.steps * cfg.b;
      audit->at_most_once_ok = true;
    }
    return result;
  }

  const bool use_online = cfg.policy == scoring::Policy::Learnability;
  const long warmup = std::lround(cfg.warmup_frac * static_cast<double>(cfg.steps));

  loops::Model learner = task.init_model(
      cfg.learner_spec, Rng::derive(cfg.seed, kRoleLearnerInit));
  loops::ModelOpt learner_opt =
      task.init_opt(learner, cfg.base_lr, cfg.weight_decay, warmup,
                    static_cast<long>(cfg.steps));
  loops::Model online;
  loops::ModelOpt online_opt;
  if (use_online) {
    online = task.init_model(cfg.proxy_spec,
                             Rng::derive(cfg.seed, kRoleOnlineInit));
    online_opt = task.init_opt(online, cfg.base_lr, cfg.weight_decay, warmup,
                               static_cast<long>(cfg.steps));
  }

  Shared shared(topology.capacity, cfg.temperature, topology.spi_target);
  {
    auto snap = std::make_shared<Snapshot>();
    snap->learner = learner;
    snap->online = online;
    snap->reference = reference;
    shared.publish(snap);
  }

  const std::size_t backlog_limit = 2 * cfg.big_b;
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(topology.n_workers));
  for (int w = 0; w < topology.n_workers; ++w)
    workers.emplace_back(scorer_worker, std::cref(cfg), std::cref(task),
                         std::ref(shared), w, backlog_limit);

  Rng select_rng(Rng::derive(cfg.seed, kRoleSelect));
  loops::RunResult result;
  std::unordered_set<std::uint64_t> seen_ids;
  bool at_most_once = true;
  double noise_acc = 0.0, loss_acc = 0.0;
  std::size_t acc_count = 0;

  const double learner_per =
      cfg.cost_ratio * cfg.f_learn * static_cast<double>(cfg.b);
  const double f_act = use_online ? 2.0 * cfg.f_proxy : cfg.f_proxy;
  const double actor_per =
      f_act * static_cast<double>(cfg.big_b) +
      (use_online ? cfg.cost_ratio * cfg.f_proxy * static_cast<double>(cfg.b)
                  : 0.0);

  auto eval_row = [&](std::size_t step_done) {
    loops::MetricsRow row;
    row.step = static_cast<long>(step_done);
    row.metric = task.evaluate(learner);
    row.loss = acc_count ? loss_acc / static_cast<double>(acc_count) : 0.0;
    row.sel_noise_frac =
        acc_count ? noise_acc / static_cast<double>(acc_count) : 0.0;
    const double n = static_cast<double>(step_done);
    row.cum_flops_learner = learner_per * n;
    row.cum_flops_actor = actor_per * n;
    row.cum_flops_ref = ref_pretrain_gflops;
    result.rows.push_back(row);
    noise_acc = loss_acc = 0.0;
    acc_count = 0;
  };
  eval_row(0);

  std::size_t steps_done = 0;
  for (std::size_t step = 0; step < cfg.steps; ++step) {
    // Wait for SPI admission and enough unconsumed candidates; a stalled
    // scorer stalls the learner rather than letting it reuse data.
    while (!shared.stop.load()) {
      const bool admitted = shared.spi.admit_sample(
          shared.bank.inserted_total(), shared.bank.sampled_total(), cfg.b);
      if (admitted && shared.bank.live_unconsumed() >= cfg.b) break;
      std::this_thread::sleep_for(200us);
    }
    if (shared.stop.load()) break;

    std::vector<std::uint64_t> ids;
    try {
      ids = shared.bank.sample_prioritized(cfg.b, select_rng);
    } catch (const std::exception&) {
      continue;  // raced with eviction; retry admission
    }
    std::vector<std::size_t> sub(ids.size());
    {
      std::lock_guard<std::mutex> lock(shared.map_mu);
      for (std::size_t j = 0; j < ids.size(); ++j)
        sub[j] = shared.id_to_dataset[ids[j]];
    }
    for (std::uint64_t id : ids)
      if (!seen_ids.insert(id).second) at_most_once = false;

    const double loss = task.update(learner, learner_opt, sub, 1.0);
    if (use_online) task.update(online, online_opt, sub, 1.0);
    result.selected.push_back(sub);
    const double nf = task.noise_fraction(sub);
    result.step_noise_frac.push_back(nf);
    noise_acc += nf;
    loss_acc += loss;
    ++acc_count;
    ++steps_done;

    if (steps_done % static_cast<std::size_t>(topology.param_sync_interval) ==
        0) {
      auto snap = std::make_shared<Snapshot>();
      snap->learner = learner;
      snap->online = online;
      snap->reference = reference;
      snap->version = static_cast<long>(steps_done);
      shared.publish(snap);
    }
    if (steps_done % cfg.eval_every == 0 || steps_done == cfg.steps)
      eval_row(steps_done);
  }

  shared.stop.store(true);
  for (std::thread& t : workers) t.join();

  if (audit) {
    audit->inserted_total = shared.bank.inserted_total();
    audit->sampled_total = shared.bank.sampled_total();
    audit->at_most_once_ok = at_most_once;
    audit->worker_error = shared.error.load();
    audit->worker_error_message = shared.error_message;
  }
  result.learner = std::move(learner);
  result.total_steps = static_cast<long>(steps_done);
  return result;
}

}  // namespace actsel::async
