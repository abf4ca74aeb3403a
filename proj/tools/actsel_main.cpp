#include <cmath>
#include <cstdio>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "actsel/async.hpp"
#include "actsel/checkpoint.hpp"
#include "actsel/config.hpp"
#include "actsel/data.hpp"
#include "actsel/flops.hpp"
#include "actsel/loops.hpp"
#include "actsel/metrics.hpp"
#include "actsel/replay_service.hpp"
#include "actsel/scoring.hpp"

namespace {

using namespace actsel;

// Keeps the datasets alive next to the task that views them.
struct TaskBundle {
  data::LabeledDataset train_c, holdout_c;
  data::PairedDataset train_p, holdout_p;
  std::unique_ptr<loops::Task> task;
  std::unique_ptr<loops::Task> holdout_task;  // for held-out reference training
  bool paired = false;
  std::string metric_name;
};

TaskBundle build_task(const config::ExperimentConfig& cfg) {
  TaskBundle bundle;
  const config::DatasetConfig& d = cfg.dataset;
  if (d.task == "classification") {
    data::LabeledDataset full =
        d.csv_path.empty()
            ? data::gen_classification(d.n, d.d, d.k, d.noise_rate, d.seed)
            : data::load_csv(d.csv_path);
    auto [train, holdout] =
        data::split_holdout(full, d.holdout_fraction, d.seed + 1);
    bundle.train_c = std::move(train);
    bundle.holdout_c = std::move(holdout);
    bundle.task = loops::make_classification_task(
        bundle.train_c, bundle.holdout_c, cfg.loop.label_smoothing);
    bundle.holdout_task = loops::make_classification_task(
        bundle.holdout_c, bundle.holdout_c, cfg.loop.label_smoothing);
    bundle.metric_name = "holdout_accuracy";
  } else {
    data::PairedDataset full =
        data::gen_paired(d.n, d.d, d.mismatch_rate, d.seed);
    auto [train, holdout] =
        data::split_holdout(full, d.holdout_fraction, d.seed + 1);
    bundle.train_p = std::move(train);
    bundle.holdout_p = std::move(holdout);
    bundle.task = loops::make_contrastive_task(bundle.train_p, bundle.holdout_p);
    bundle.holdout_task =
        loops::make_contrastive_task(bundle.holdout_p, bundle.holdout_p);
    bundle.paired = true;
    bundle.metric_name = "holdout_r_at_1";
  }
  return bundle;
}

void print_summary(const char* mode, const config::ExperimentConfig& cfg,
                   const loops::RunResult& result) {
  const loops::MetricsRow& last = result.rows.back();
  std::printf(
      "RESULT mode=%s policy=%s steps=%ld metric=%.4f loss=%.4f "
      "sel_noise=%.4f gflops_learner=%.1f gflops_actor=%.1f gflops_ref=%.1f "
      "out=%s\n",
      mode, scoring::policy_name(cfg.loop.policy), result.total_steps,
      last.metric, last.loss, last.sel_noise_frac, last.cum_flops_learner,
      last.cum_flops_actor, last.cum_flops_ref, cfg.out_path.c_str());
}

config::ExperimentConfig load_or_default(const std::string& config_path) {
  config::ExperimentConfig cfg;
  if (!config_path.empty()) return config::load_config(config_path);
  cfg.finalize();
  return cfg;
}

int cmd_gen_data(const std::string& out, std::size_t n, std::size_t d, int k,
                 double noise, std::uint64_t seed) {
  data::LabeledDataset ds = data::gen_classification(n, d, k, noise, seed);
  data::save_csv(ds, out);
  std::printf("RESULT mode=gen-data n=%zu d=%zu k=%d noise=%.3f out=%s\n",
              ds.size(), d, k, noise, out.c_str());
  return 0;
}

int cmd_flops_report(const std::string& learner, const std::string& actor,
                     double spi, double beta, bool as_json) {
  const flops::CostCatalog catalog = flops::CostCatalog::builtin();
  const flops::CostReport report = flops::build_report(
      catalog.lookup(learner), catalog.lookup(actor), spi, beta);
  std::cout << (as_json ? flops::format_report_json(report)
                        : flops::format_report_text(report))
            << "\n";
  return 0;
}

int cmd_diagnose_taylor(std::uint64_t seed) {
  // Shrink the online/reference parameter gap geometrically and report the
  // log-log slope of the mean |gap|; a clean second-order term gives ~2.
  nn::ModelSpec spec;
  spec.layer_widths = {8, 16};
  spec.activation = nn::Activation::Tanh;
  spec.head = nn::HeadKind::Classifier;
  spec.out_dim = 4;
  Rng rng(seed);
  nn::ModelParams online = nn::init_params(spec, rng.next_u64());
  nn::ModelParams direction = nn::init_params(spec, rng.next_u64());

  nn::Batch batch;
  batch.features = Tensor({16, 8});
  for (double& v : batch.features.data) v = rng.next_normal();
  batch.labels.resize(16);
  for (int& l : batch.labels) l = static_cast<int>(rng.next_below(4));

  std::vector<double> log_lambda, log_gap;
  std::printf("lambda      mean|exact|   mean|gap|\n");
  for (double lambda = 1e-1; lambda >= 0.99e-4; lambda *= 0.1) {
    nn::ModelParams reference = online;
    nn::param_axpy(reference, direction, lambda);
    const std::vector<scoring::TaylorRow> rows =
        scoring::taylor_gap(online, reference, batch);
    double mean_exact = 0.0, mean_gap = 0.0;
    for (const scoring::TaylorRow& r : rows) {
      mean_exact += std::fabs(r.exact);
      mean_gap += std::fabs(r.gap);
    }
    mean_exact /= static_cast<double>(rows.size());
    mean_gap /= static_cast<double>(rows.size());
    std::printf("%-11.1e %-13.4e %-13.4e\n", lambda, mean_exact, mean_gap);
    log_lambda.push_back(std::log(lambda));
    log_gap.push_back(std::log(mean_gap));
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(log_lambda.size());
  for (std::size_t i = 0; i < log_lambda.size(); ++i) {
    sx += log_lambda[i];
    sy += log_gap[i];
    sxx += log_lambda[i] * log_lambda[i];
    sxy += log_lambda[i] * log_gap[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  std::printf("RESULT mode=diagnose-taylor slope=%.3f\n", slope);
  return 0;
}

int cmd_replay_serve(int port, std::size_t capacity, double temperature,
                     std::uint64_t seed) {
  replay::MemoryBank bank(capacity, temperature);
  replay_service::ReplayServer server(bank, seed, port);
  std::printf("replay server listening on 127.0.0.1:%d (EOF on stdin stops)\n",
              server.port());
  std::fflush(stdout);
  std::string line;
  while (std::getline(std::cin, line)) {
  }
  server.stop();
  std::printf("RESULT mode=replay-serve inserted=%llu sampled=%llu\n",
              static_cast<unsigned long long>(bank.inserted_total()),
              static_cast<unsigned long long>(bank.sampled_total()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active data selection training engine"};
  app.require_subcommand(1);

  std::string config_path, out_path, ref_path, model_path;
  std::string policy_name, reference_name;
  std::uint64_t seed_opt = 0;
  bool seed_set = false, async_mode = false, as_json = false;
  int workers = 0;
  long sync_interval = 0;
  double spi_opt = -1.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON experiment config");
    sub->add_option("--out", out_path, "metrics JSONL path");
    sub->add_option("--seed", seed_opt, "override loop seed")
        ->each([&](const std::string&) { seed_set = true; });
  };

  CLI::App* baseline = app.add_subcommand("baseline", "uniform-sampling run");
  add_common(baseline);

  CLI::App* train = app.add_subcommand("train", "prioritized selection run");
  add_common(train);
  train->add_option("--policy", policy_name,
                    "uniform|hard|easy-ref|learnability|rho|gradnorm");
  train->add_option("--reference", reference_name,
                    "pretrained|online|heldout");
  train->add_option("--ref", ref_path, "reference checkpoint (skip pretrain)");
  train->add_flag("--async", async_mode, "threaded actor/learner pipeline");
  train->add_option("--workers", workers, "scorer worker threads");
  train->add_option("--sync-interval", sync_interval,
                    "learner steps between parameter snapshots");
  train->add_option("--spi", spi_opt, "samples-per-insert target");

  CLI::App* pretrain = app.add_subcommand("pretrain-ref",
                                          "train and save a reference model");
  add_common(pretrain);
  pretrain->add_option("--ckpt", model_path, "output checkpoint path")
      ->required();

  CLI::App* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval);
  eval->add_option("--model", model_path, "checkpoint path")->required();

  std::string gen_out = "data.csv";
  std::size_t gen_n = 50000, gen_d = 32;
  int gen_k = 10;
  double gen_noise = 0.2;
  std::uint64_t gen_seed = 1;
  CLI::App* gen = app.add_subcommand("gen-data",
                                     "write a synthetic classification CSV");
  gen->add_option("--out", gen_out, "CSV path");
  gen->add_option("--n", gen_n, "examples");
  gen->add_option("--d", gen_d, "feature dim");
  gen->add_option("--k", gen_k, "classes");
  gen->add_option("--noise", gen_noise, "label noise rate");
  gen->add_option("--seed", gen_seed, "generator seed");

  std::string fl_learner = "B", fl_actor = "Ti";
  double fl_spi = 0.5, fl_beta = 0.8;
  CLI::App* fl = app.add_subcommand("flops-report",
                                    "per-update compute cost comparison");
  fl->add_option("--learner", fl_learner, "learner cost catalog entry");
  fl->add_option("--actor", fl_actor, "actor cost catalog entry");
  fl->add_option("--spi", fl_spi, "samples-per-insert b/B");
  fl->add_option("--beta", fl_beta, "active update fraction");
  fl->add_flag("--json", as_json, "emit JSON");

  std::uint64_t taylor_seed = 7;
  CLI::App* taylor = app.add_subcommand(
      "diagnose-taylor", "first-order score approximation sweep");
  taylor->add_option("--seed", taylor_seed, "model seed");

  int serve_port = 0;
  std::size_t serve_capacity = 4096;
  double serve_temp = 1.0;
  std::uint64_t serve_seed = 1;
  CLI::App* serve = app.add_subcommand("replay-serve",
                                       "loopback replay bank server");
  serve->add_option("--port", serve_port, "TCP port (0: ephemeral)");
  serve->add_option("--capacity", serve_capacity, "bank capacity");
  serve->add_option("--temperature", serve_temp, "softmax temperature");
  serve->add_option("--seed", serve_seed, "sampling seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed())
      return cmd_gen_data(gen_out, gen_n, gen_d, gen_k, gen_noise, gen_seed);
    if (fl->parsed())
      return cmd_flops_report(fl_learner, fl_actor, fl_spi, fl_beta, as_json);
    if (taylor->parsed()) return cmd_diagnose_taylor(taylor_seed);
    if (serve->parsed())
      return cmd_replay_serve(serve_port, serve_capacity, serve_temp,
                              serve_seed);

    config::ExperimentConfig cfg = load_or_default(config_path);
    if (seed_set) cfg.loop.seed = seed_opt;
    if (!out_path.empty()) cfg.out_path = out_path;
    if (!policy_name.empty())
      cfg.loop.policy = scoring::policy_from_name(policy_name);
    if (!reference_name.empty()) {
      if (reference_name == "pretrained")
        cfg.loop.reference_source = loops::ReferenceSource::Pretrained;
      else if (reference_name == "online")
        cfg.loop.reference_source = loops::ReferenceSource::OnlineOnePass;
      else if (reference_name == "heldout")
        cfg.loop.reference_source = loops::ReferenceSource::HeldOutPretrained;
      else
        throw ConfigError("--reference must be pretrained, online, or heldout");
    }
    if (workers > 0) cfg.topology.n_workers = workers;
    if (sync_interval > 0) cfg.topology.param_sync_interval = sync_interval;
    if (spi_opt > 0.0) cfg.topology.spi_target = spi_opt;
    cfg.finalize();

    TaskBundle bundle = build_task(cfg);

    if (baseline->parsed()) {
      cfg.loop.policy = scoring::Policy::Uniform;
      loops::RunResult result = loops::run_uniform(cfg.loop, *bundle.task);
      metrics::write_jsonl(cfg.out_path, result, bundle.metric_name);
      print_summary("baseline", cfg, result);
      return 0;
    }

    if (pretrain->parsed()) {
      double gflops = 0.0;
      loops::Model ref =
          loops::pretrain_reference(cfg.loop, *bundle.task, &gflops);
      checkpoint::save_model(ref, model_path);
      std::printf("RESULT mode=pretrain-ref gflops=%.1f ckpt=%s\n", gflops,
                  model_path.c_str());
      return 0;
    }

    if (eval->parsed()) {
      loops::Model model = checkpoint::load_model(model_path);
      const double metric = bundle.task->evaluate(model);
      std::printf("RESULT mode=eval metric=%.4f model=%s\n", metric,
                  model_path.c_str());
      return 0;
    }

    // train
    loops::RunResult result;
    if (cfg.loop.reference_source == loops::ReferenceSource::OnlineOnePass) {
      result = loops::run_algorithm2(cfg.loop, *bundle.task);
    } else {
      double ref_gflops = 0.0;
      loops::Model ref;
      if (!ref_path.empty()) {
        ref = checkpoint::load_model(ref_path);
      } else if (cfg.loop.reference_source ==
                 loops::ReferenceSource::HeldOutPretrained) {
        ref = loops::pretrain_reference(cfg.loop, *bundle.holdout_task,
                                        &ref_gflops);
      } else {
        ref = loops::pretrain_reference(cfg.loop, *bundle.task, &ref_gflops);
      }
      if (async_mode) {
        async::AsyncAudit audit;
        result = async::run_async(cfg.loop, *bundle.task, ref, ref_gflops,
                                  cfg.topology, &audit);
        std::printf("AUDIT inserted=%llu sampled=%llu spi=%.4f "
                    "at_most_once=%s%s%s\n",
                    static_cast<unsigned long long>(audit.inserted_total),
                    static_cast<unsigned long long>(audit.sampled_total),
                    audit.inserted_total
                        ? static_cast<double>(audit.sampled_total) /
                              static_cast<double>(audit.inserted_total)
                        : 0.0,
                    audit.at_most_once_ok ? "yes" : "NO",
                    audit.worker_error ? " worker_error=" : "",
                    audit.worker_error ? audit.worker_error_message.c_str()
                                       : "");
        if (audit.worker_error) return 1;
      } else {
        result = loops::run_algorithm1(cfg.loop, *bundle.task, ref, ref_gflops);
      }
    }
    metrics::write_jsonl(cfg.out_path, result, bundle.metric_name);
    print_summary(async_mode ? "train-async" : "train", cfg, result);
    return 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
