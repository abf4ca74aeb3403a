#include "actsel/metrics.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace actsel::metrics {

void write_jsonl(const std::string& path, const loops::RunResult& result,
                 const std::string& metric_name) {
  std::ofstream f(path);
  if (!f) throw ConfigError("metrics: cannot open " + path);
  f << "# actsel metrics v1 metric=" << metric_name << "\n";
  for (const loops::MetricsRow& row : result.rows) {
    nlohmann::json j;
    j["step"] = row.step;
    j["metric"] = metric_name;
    j["value"] = row.metric;
    j["cum_flops_learner"] = row.cum_flops_learner;
    j["cum_flops_actor"] = row.cum_flops_actor;
    j["cum_flops_ref"] = row.cum_flops_ref;
    j["loss"] = row.loss;
    j["sel_noise_frac"] = row.sel_noise_frac;
    f << j.dump() << "\n";
    f.flush();
  }
}

LoadedMetrics read_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("metrics: cannot open " + path);
  LoadedMetrics out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    nlohmann::json j = nlohmann::json::parse(line);
    loops::MetricsRow row;
    row.step = j.at("step").get<long>();
    row.metric = j.at("value").get<double>();
    row.cum_flops_learner = j.at("cum_flops_learner").get<double>();
    row.cum_flops_actor = j.at("cum_flops_actor").get<double>();
    row.cum_flops_ref = j.at("cum_flops_ref").get<double>();
    row.loss = j.value("loss", 0.0);
    row.sel_noise_frac = j.value("sel_noise_frac", 0.0);
    out.metric_name = j.at("metric").get<std::string>();
    out.result.rows.push_back(row);
  }
  if (!out.result.rows.empty())
    out.result.total_steps = out.result.rows.back().step;
  return out;
}

}  // namespace actsel::metrics
