#include "actsel/config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "actsel/flops.hpp"

namespace actsel::config {

namespace {

using nlohmann::json;

template <typename T>
void get_to(const json& j, const char* section, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const json::exception&) {
    throw ConfigError(std::string("config: bad value for ") + section + "." +
                      key);
  }
}

}  // namespace

void ExperimentConfig::finalize() {
  if (dataset.task != "classification" && dataset.task != "paired")
    throw ConfigError("config: dataset.task must be classification or paired");
  nn::Activation act;
  if (activation == "relu")
    act = nn::Activation::Relu;
  else if (activation == "tanh")
    act = nn::Activation::Tanh;
  else
    throw ConfigError("config: activation must be relu or tanh");

  auto build_spec = [&](const std::vector<int>& hidden) {
    nn::ModelSpec spec;
    spec.layer_widths.push_back(static_cast<int>(dataset.d));
    for (int h : hidden) spec.layer_widths.push_back(h);
    spec.activation = act;
    if (dataset.task == "classification") {
      spec.head = nn::HeadKind::Classifier;
      spec.out_dim = dataset.k;
    } else {
      spec.head = nn::HeadKind::Encoder;
      spec.out_dim = embed_dim;
    }
    return spec;
  };
  loop.learner_spec = build_spec(learner_hidden);
  loop.proxy_spec = build_spec(proxy_hidden);

  const flops::CostCatalog catalog = flops::CostCatalog::builtin();
  loop.f_learn = catalog.lookup(learner_cost_name);
  loop.f_proxy = catalog.lookup(actor_cost_name);

  if (topology.n_workers < 1)
    throw ConfigError("config: topology.workers must be >= 1");
  if (topology.param_sync_interval < 1)
    throw ConfigError("config: topology.sync_interval must be >= 1");
  if (topology.spi_target <= 0.0 || topology.spi_target > 1.0)
    throw ConfigError("config: topology.spi must be in (0, 1]");
  loop.validate();
}

ExperimentConfig parse_config_json(const std::string& text,
                                   const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError("config: " + origin + ": " + e.what());
  }
  ExperimentConfig cfg;
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    get_to(d, "dataset", "task", cfg.dataset.task);
    get_to(d, "dataset", "n", cfg.dataset.n);
    get_to(d, "dataset", "d", cfg.dataset.d);
    get_to(d, "dataset", "k", cfg.dataset.k);
    get_to(d, "dataset", "noise", cfg.dataset.noise_rate);
    get_to(d, "dataset", "mismatch", cfg.dataset.mismatch_rate);
    get_to(d, "dataset", "holdout_fraction", cfg.dataset.holdout_fraction);
    get_to(d, "dataset", "seed", cfg.dataset.seed);
    get_to(d, "dataset", "csv", cfg.dataset.csv_path);
  }
  if (j.contains("model")) {
    const json& m = j["model"];
    get_to(m, "model", "learner_hidden", cfg.learner_hidden);
    get_to(m, "model", "proxy_hidden", cfg.proxy_hidden);
    get_to(m, "model", "activation", cfg.activation);
    get_to(m, "model", "embed_dim", cfg.embed_dim);
  }
  if (j.contains("loop")) {
    const json& l = j["loop"];
    get_to(l, "loop", "B", cfg.loop.big_b);
    get_to(l, "loop", "b", cfg.loop.b);
    get_to(l, "loop", "steps", cfg.loop.steps);
    get_to(l, "loop", "eval_every", cfg.loop.eval_every);
    get_to(l, "loop", "ref_pretrain_steps", cfg.loop.ref_pretrain_steps);
    get_to(l, "loop", "ref_pretrain_lr", cfg.loop.ref_pretrain_lr);
    get_to(l, "loop", "temperature", cfg.loop.temperature);
    get_to(l, "loop", "lr", cfg.loop.base_lr);
    get_to(l, "loop", "weight_decay", cfg.loop.weight_decay);
    get_to(l, "loop", "warmup_frac", cfg.loop.warmup_frac);
    get_to(l, "loop", "smoothing", cfg.loop.label_smoothing);
    get_to(l, "loop", "ref_lr_scale", cfg.loop.ref_lr_scale);
    get_to(l, "loop", "share_online_init", cfg.loop.share_online_init);
    get_to(l, "loop", "seed", cfg.loop.seed);
    if (l.contains("policy")) {
      std::string p;
      get_to(l, "loop", "policy", p);
      cfg.loop.policy = scoring::policy_from_name(p);
    }
    if (l.contains("reference")) {
      std::string r;
      get_to(l, "loop", "reference", r);
      if (r == "pretrained")
        cfg.loop.reference_source = loops::ReferenceSource::Pretrained;
      else if (r == "online")
        cfg.loop.reference_source = loops::ReferenceSource::OnlineOnePass;
      else if (r == "heldout")
        cfg.loop.reference_source = loops::ReferenceSource::HeldOutPretrained;
      else
        throw ConfigError("config: loop.reference must be pretrained, online, "
                          "or heldout");
    }
  }
  if (j.contains("ledger")) {
    const json& l = j["ledger"];
    get_to(l, "ledger", "learner", cfg.learner_cost_name);
    get_to(l, "ledger", "actor", cfg.actor_cost_name);
    get_to(l, "ledger", "cost_ratio", cfg.loop.cost_ratio);
  }
  if (j.contains("topology")) {
    const json& t = j["topology"];
    get_to(t, "topology", "workers", cfg.topology.n_workers);
    get_to(t, "topology", "capacity", cfg.topology.capacity);
    get_to(t, "topology", "spi", cfg.topology.spi_target);
    get_to(t, "topology", "sync_interval", cfg.topology.param_sync_interval);
    if (t.contains("mode")) {
      std::string m;
      get_to(t, "topology", "mode", m);
      if (m == "per-superbatch")
        cfg.topology.mode = replay::BankMode::PerSuperbatch;
      else if (m == "persistent")
        cfg.topology.mode = replay::BankMode::PersistentBank;
      else
        throw ConfigError(
            "config: topology.mode must be per-superbatch or persistent");
    }
  }
  if (j.contains("out")) get_to(j, "", "out", cfg.out_path);
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_json(ss.str(), path);
}

}  // namespace actsel::config
