#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actsel/loops.hpp"
#include "actsel/replay.hpp"

namespace actsel::config {

struct DatasetConfig {
  std::string task = "classification";  // or "paired"
  std::size_t n = 50000;
  std::size_t d = 32;
  int k = 10;
  double noise_rate = 0.2;
  double mismatch_rate = 0.3;
  double holdout_fraction = 0.1;
  std::uint64_t seed = 1;
  std::string csv_path;  // when set, load instead of generating
};

struct PipelineTopology {
  int n_workers = 1;
  std::size_t capacity = 4096;
  double spi_target = 0.5;
  long param_sync_interval = 1;
  replay::BankMode mode = replay::BankMode::PerSuperbatch;
};

struct ExperimentConfig {
  DatasetConfig dataset;
  loops::LoopConfig loop;
  PipelineTopology topology;
  std::vector<int> learner_hidden = {64};
  std::vector<int> proxy_hidden = {64};
  std::string activation = "relu";
  int embed_dim = 16;  // paired task
  std::string learner_cost_name = "B";
  std::string actor_cost_name = "Ti";
  std::string out_path = "metrics.jsonl";

  // Resolves model specs and ledger values, then cross-validates. Throws
  // ConfigError naming the offending field.
  void finalize();
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& text,
                                   const std::string& origin);

}  // namespace actsel::config
