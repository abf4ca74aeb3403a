#include <cstdio>
#include <fstream>
#include <string>

#include "actsel/checkpoint.hpp"
#include "actsel/config.hpp"
#include "actsel/metrics.hpp"
#include "actsel/nn.hpp"
#include "doctest.h"

using namespace actsel;

namespace {

std::string temp_path(const char* name) {
  return std::string("actsel_test_") + name;
}

loops::RunResult sample_run() {
  loops::RunResult r;
  for (int i = 1; i <= 5; ++i) {
    loops::MetricsRow row;
    row.step = i * 10;
    row.metric = 0.1 * i + 1e-7;  // exercise full double round-trip
    row.loss = 2.0 / i;
    row.sel_noise_frac = 0.01 * i;
    row.cum_flops_learner = 1234.5678 * i;
    row.cum_flops_actor = 42.42 * i;
    row.cum_flops_ref = 7.7;
    r.rows.push_back(row);
  }
  r.total_steps = 50;
  return r;
}

}  // namespace

TEST_CASE("metrics JSONL round trip preserves every field") {
  const std::string path = temp_path("metrics.jsonl");
  auto run = sample_run();
  metrics::write_jsonl(path, run, "holdout_accuracy");
  auto loaded = metrics::read_jsonl(path);
  std::remove(path.c_str());

  CHECK(loaded.metric_name == "holdout_accuracy");
  CHECK(loaded.result.total_steps == 50);
  REQUIRE(loaded.result.rows.size() == run.rows.size());
  for (std::size_t i = 0; i < run.rows.size(); ++i) {
    CHECK(loaded.result.rows[i].step == run.rows[i].step);
    CHECK(loaded.result.rows[i].metric == run.rows[i].metric);
    CHECK(loaded.result.rows[i].loss == run.rows[i].loss);
    CHECK(loaded.result.rows[i].sel_noise_frac == run.rows[i].sel_noise_frac);
    CHECK(loaded.result.rows[i].cum_flops_learner ==
          run.rows[i].cum_flops_learner);
    CHECK(loaded.result.rows[i].cum_flops_actor == run.rows[i].cum_flops_actor);
    CHECK(loaded.result.rows[i].cum_flops_ref == run.rows[i].cum_flops_ref);
  }

  // file starts with a comment header
  metrics::write_jsonl(path, run, "r_at_1");
  std::ifstream f(path);
  std::string first;
  std::getline(f, first);
  f.close();
  std::remove(path.c_str());
  CHECK(first.rfind("#", 0) == 0);
  CHECK(first.find("r_at_1") != std::string::npos);
}

TEST_CASE("checkpoint round trip restores parameters bit-exactly") {
  nn::ModelSpec spec;
  spec.layer_widths = {6, 12};
  spec.out_dim = 5;
  loops::Model model;
  model.a = nn::init_params(spec, 31);

  const std::string path = temp_path("model.ckpt");
  checkpoint::save_model(model, path);
  auto loaded = checkpoint::load_model(path);
  std::remove(path.c_str());

  CHECK(loaded.two_tower == false);
  CHECK(loaded.a.spec == model.a.spec);
  CHECK(nn::flatten_params(loaded.a) == nn::flatten_params(model.a));
}

TEST_CASE("two-tower checkpoint round trip") {
  nn::ModelSpec spec;
  spec.layer_widths = {4, 8};
  spec.out_dim = 3;
  spec.head = nn::HeadKind::Encoder;
  loops::Model model;
  model.two_tower = true;
  model.a = nn::init_params(spec, 1);
  model.b = nn::init_params(spec, 2);

  const std::string path = temp_path("towers.ckpt");
  checkpoint::save_model(model, path);
  auto loaded = checkpoint::load_model(path);
  std::remove(path.c_str());

  CHECK(loaded.two_tower);
  CHECK(nn::flatten_params(loaded.a) == nn::flatten_params(model.a));
  CHECK(nn::flatten_params(loaded.b) == nn::flatten_params(model.b));
}

TEST_CASE("checkpoint loader rejects corrupted files") {
  const std::string path = temp_path("corrupt.ckpt");
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOTACKPTxxxxxxxxxxxxxxxx";
  }
  CHECK_THROWS(checkpoint::load_model(path));
  std::remove(path.c_str());
  CHECK_THROWS(checkpoint::load_model("no_such_checkpoint.ckpt"));
}

TEST_CASE("config parsing: full document") {
  const std::string text = R"({
    "dataset": {"task": "classification", "n": 5000, "d": 16, "k": 5,
                 "noise": 0.2, "holdout_fraction": 0.1, "seed": 3},
    "model": {"learner_hidden": [32], "proxy_hidden": [16],
               "activation": "relu"},
    "loop": {"B": 64, "b": 32, "steps": 200, "lr": 0.001,
              "policy": "learnability", "reference": "pretrained",
              "temperature": 0.5, "ref_pretrain_lr": 0.002},
    "ledger": {"learner": "B", "actor": "Ti"},
    "topology": {"workers": 2, "spi": 0.5, "mode": "persistent"}
  })";
  auto cfg = config::parse_config_json(text, "inline");
  CHECK(cfg.dataset.n == 5000);
  CHECK(cfg.loop.big_b == 64);
  CHECK(cfg.loop.b == 32);
  CHECK(cfg.loop.policy == scoring::Policy::Learnability);
  CHECK(cfg.loop.temperature == 0.5);
  CHECK(cfg.loop.ref_pretrain_lr == 0.002);
  CHECK(cfg.loop.f_learn == 17.6);
  CHECK(cfg.loop.f_proxy == 1.3);
  CHECK(cfg.topology.n_workers == 2);
  CHECK(cfg.topology.mode == replay::BankMode::PersistentBank);
  CHECK(cfg.loop.learner_spec.layer_widths == std::vector<int>{16, 32});
  CHECK(cfg.loop.learner_spec.out_dim == 5);
}

TEST_CASE("config parsing: errors name the offending field") {
  using config::parse_config_json;
  CHECK_THROWS_AS(parse_config_json("{ not json", "x"), ConfigError);

  try {
    parse_config_json(R"({"loop": {"B": "sixty-four"}})", "x");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("loop.B") != std::string::npos);
  }

  CHECK_THROWS_AS(
      parse_config_json(R"({"loop": {"policy": "psychic"}})", "x"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_json(R"({"dataset": {"task": "regression"}})", "x"),
      ConfigError);
  CHECK_THROWS_AS(
      parse_config_json(R"({"topology": {"spi": 2.0}})", "x"), ConfigError);
  CHECK_THROWS_AS(config::load_config("no_such_config.json"), ConfigError);
}
