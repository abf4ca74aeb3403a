#pragma once

#include <string>

#include "actsel/loops.hpp"

namespace actsel::metrics {

// Append-only JSONL sink: a leading '#' header comment, then one object per
// eval step with fields step, metric, value, cum_flops_learner,
// cum_flops_actor, cum_flops_ref (plus loss and sel_noise_frac).
void write_jsonl(const std::string& path, const loops::RunResult& result,
                 const std::string& metric_name);

struct LoadedMetrics {
  loops::RunResult result;  // rows and total_steps only
  std::string metric_name;
};
LoadedMetrics read_jsonl(const std::string& path);

}  // namespace actsel::metrics
