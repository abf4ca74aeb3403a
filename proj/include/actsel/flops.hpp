#pragma once

#include <map>
#include <string>
#include <vector>

#include "actsel/tensor.hpp"

namespace actsel::flops {

// Backward/forward cost ratio: a gradient update ~= this many inference
// passes. Overridable in every formula below.
inline constexpr double kUpdateCostRatio = 3.0;

// Per-example inference GFLOPs for the ViT family used as ledger entries.
class CostCatalog {
 public:
  static CostCatalog builtin();  // seeded with the standard ViT entries
  void add(const std::string& name, double gflops);
  double lookup(const std::string& name) const;  // throws ConfigError
  const std::map<std::string, double>& entries() const { return entries_; }

 private:
  std::map<std::string, double> entries_;
};

// Per-learner-update costs. spi = b/B; beta = active-run update fraction.
double cost_uniform(double f_learn, double ratio = kUpdateCostRatio);
double cost_easy_ref(double f_learn, double f_ref, double spi, double beta,
                     double ratio = kUpdateCostRatio);
double cost_rho(double f_learn, double f_ref, double spi, double beta,
                double ratio = kUpdateCostRatio);
double cost_classact(double f_learn, double f_ref, double spi, double beta,
                     double ratio = kUpdateCostRatio);

struct Positivity {
  bool positive;   // strict inequality holds
  double margin;   // uniform cost minus active cost, per update
};

// (ratio*F_learn + rho*F_act)*beta + ratio*F_ref < ratio*F_learn
Positivity positivity_check(double f_learn, double f_act, double f_ref,
                            double rho, double beta,
                            double ratio = kUpdateCostRatio);

// Largest beta still compute-positive:
// beta* = (ratio*F_learn - ratio*F_ref) / (ratio*F_learn + rho*F_act)
double break_even_beta(double f_learn, double f_act, double f_ref, double rho,
                       double ratio = kUpdateCostRatio);

struct MethodCost {
  std::string method;
  double cost_per_update;
  double speedup_pct;      // vs uniform
  double break_even;       // beta*
};

struct CostReport {
  double f_learn, f_ref, spi, beta;
  std::vector<MethodCost> methods;  // uniform, easy_ref, rho, classact
};

CostReport build_report(double f_learn, double f_ref, double spi, double beta,
                        double ratio = kUpdateCostRatio);
std::string format_report_text(const CostReport& report);
std::string format_report_json(const CostReport& report);

// Closed-form cumulative run totals (GFLOPs) used by the training loops;
// tests check the loops' per-step integration against these exactly.
struct RunTotals {
  double learner;  // gradient updates on the learner
  double actor;    // scoring inference plus online-model training
  double ref;      // reference training (pretraining or online super-batch)
};

RunTotals totals_uniform(double f_learn, std::size_t b, std::size_t steps,
                         double ratio = kUpdateCostRatio);
RunTotals totals_algorithm1(double f_learn, double f_act, double f_online,
                            std::size_t big_b, std::size_t b,
                            std::size_t steps, double ref_pretrain_gflops,
                            double ratio = kUpdateCostRatio);
RunTotals totals_algorithm2(double f_learn, double f_act, double f_online,
                            double f_ref, std::size_t big_b, std::size_t b,
                            std::size_t steps,
                            double ratio = kUpdateCostRatio);

}  // namespace actsel::flops
