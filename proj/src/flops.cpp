#include "actsel/flops.hpp"

#include <cstdio>

#include <nlohmann/json.hpp>

namespace actsel::flops {

CostCatalog CostCatalog::builtin() {
  CostCatalog c;
  c.add("L", 61.6);
  c.add("B", 17.6);
  c.add("S", 4.6);
  c.add("Ti", 1.3);
  c.add("Mu_6-3", 1.24);
  c.add("Mu_12-2", 1.23);
  c.add("Mu_6-2", 0.48);
  c.add("Mu_12-1", 0.23);
  c.add("Mu_6-1", 0.203);
  c.add("Mu_3-1", 0.065);
  c.add("Mu_2-1", 0.033);
  c.add("Mu_1-1", 0.011);
  return c;
}

void CostCatalog::add(const std::string& name, double gflops) {
  if (gflops <= 0.0) throw ConfigError("catalog: F must be > 0");
  entries_[name] = gflops;
}

double CostCatalog::lookup(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end())
    throw ConfigError("catalog: unknown model name: " + name);
  return it->second;
}

double cost_uniform(double f_learn, double ratio) { return ratio * f_learn; }

double cost_easy_ref(double f_learn, double f_ref, double spi, double beta,
                     double ratio) {
  return (ratio * f_learn + f_ref / spi) * beta + ratio * f_ref;
}

double cost_rho(double f_learn, double f_ref, double spi, double beta,
                double ratio) {
  return (ratio * f_learn + (f_learn + f_ref) / spi) * beta + ratio * f_ref;
}

double cost_classact(double f_learn, double f_ref, double spi, double beta,
                     double ratio) {
  return (ratio * f_learn + 2.0 * f_ref / spi) * beta + ratio * f_ref;
}

Positivity positivity_check(double f_learn, double f_act, double f_ref,
                            double rho, double beta, double ratio) {
  const double active = (ratio * f_learn + rho * f_act) * beta + ratio * f_ref;
  const double uniform = ratio * f_learn;
  return {active < uniform, uniform - active};
}

double break_even_beta(double f_learn, double f_act, double f_ref, double rho,
                       double ratio) {
  const double numer = ratio * f_learn - ratio * f_ref;
  const double denom = ratio * f_learn + rho * f_act;
  const double beta = numer / denom;
  return beta > 0.0 ? beta : 0.0;
}

CostReport build_report(double f_learn, double f_ref, double spi, double beta,
                        double ratio) {
  const double rho = 1.0 / spi;
  CostReport r;
  r.f_learn = f_learn;
  r.f_ref = f_ref;
  r.spi = spi;
  r.beta = beta;
  const double uniform = cost_uniform(f_learn, ratio);
  auto pct = [&](double c) { return 100.0 * (uniform - c) / uniform; };
  r.methods.push_back({"uniform", uniform, 0.0, 1.0});
  r.methods.push_back({"easy_ref", cost_easy_ref(f_learn, f_ref, spi, beta, ratio),
                       pct(cost_easy_ref(f_learn, f_ref, spi, beta, ratio)),
                       break_even_beta(f_learn, f_ref, f_ref, rho, ratio)});
  r.methods.push_back(
      {"rho", cost_rho(f_learn, f_ref, spi, beta, ratio),
       pct(cost_rho(f_learn, f_ref, spi, beta, ratio)),
       break_even_beta(f_learn, f_learn + f_ref, f_ref, rho, ratio)});
  r.methods.push_back(
      {"classact", cost_classact(f_learn, f_ref, spi, beta, ratio),
       pct(cost_classact(f_learn, f_ref, spi, beta, ratio)),
       break_even_beta(f_learn, 2.0 * f_ref, f_ref, rho, ratio)});
  return r;
}

std::string format_report_text(const CostReport& r) {
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf),
                "F_learn=%.3f F_ref=%.3f SPI=%.3f beta=%.3f\n", r.f_learn,
                r.f_ref, r.spi, r.beta);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-10s %14s %12s %14s\n", "method",
                "C/update", "speedup%", "break-even b*");
  out += buf;
  for (const MethodCost& m : r.methods) {
    std::snprintf(buf, sizeof(buf), "%-10s %14.4f %12.2f %14.4f\n",
                  m.method.c_str(), m.cost_per_update, m.speedup_pct,
                  m.break_even);
    out += buf;
  }
  return out;
}

std::string format_report_json(const CostReport& r) {
  nlohmann::json j;
  j["f_learn"] = r.f_learn;
  j["f_ref"] = r.f_ref;
  j["spi"] = r.spi;
  j["beta"] = r.beta;
  for (const MethodCost& m : r.methods) {
    j["methods"][m.method] = {{"cost_per_update", m.cost_per_update},
                              {"speedup_pct", m.speedup_pct},
                              {"break_even_beta", m.break_even}};
  }
  return j.dump();
}

RunTotals totals_uniform(double f_learn, std::size_t b, std::size_t steps,
                         double ratio) {
  return {ratio * f_learn * static_cast<double>(b) * static_cast<double>(steps),
          0.0, 0.0};
}

RunTotals totals_algorithm1(double f_learn, double f_act, double f_online,
                            std::size_t big_b, std::size_t b,
                            std::size_t steps, double ref_pretrain_gflops,
                            double ratio) {
  const double n = static_cast<double>(steps);
  return {ratio * f_learn * static_cast<double>(b) * n,
          (f_act * static_cast<double>(big_b) +
           ratio * f_online * static_cast<double>(b)) *
              n,
          ref_pretrain_gflops};
}

RunTotals totals_algorithm2(double f_learn, double f_act, double f_online,
                            double f_ref, std::size_t big_b, std::size_t b,
                            std::size_t steps, double ratio) {
  const double n = static_cast<double>(steps);
  return {ratio * f_learn * static_cast<double>(b) * n,
          (f_act * static_cast<double>(big_b) +
           ratio * f_online * static_cast<double>(b)) *
              n,
          ratio * f_ref * static_cast<double>(big_b) * n};
}

}  // namespace actsel::flops
