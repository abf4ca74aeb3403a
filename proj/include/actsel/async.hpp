#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "actsel/config.hpp"
#include "actsel/loops.hpp"

namespace actsel::async {

struct AsyncAudit {
  std::uint64_t inserted_total = 0;
  std::uint64_t sampled_total = 0;
  bool at_most_once_ok = true;
  bool worker_error = false;
  std::string worker_error_message;
};

// Actor/learner/replay pipeline. With a single worker, per-super-batch bank
// and sync interval 1 the schedule is fully synchronous and the result is
// bit-identical to run_algorithm1. Otherwise scorer workers stream scored
// super-batches into a persistent bank, the learner samples prioritized
// sub-batches under SPI control, and parameter snapshots are republished
// every param_sync_interval learner steps.
loops::RunResult run_async(const loops::LoopConfig& cfg,
                           const loops::Task& task,
                           const loops::Model& reference,
                           double ref_pretrain_gflops,
                           const config::PipelineTopology& topology,
                           AsyncAudit* audit = nullptr);

}  // namespace actsel::async
