#pragma once

#include <cstdint>
#include <deque>
#include <mutex>
#include <vector>

#include "actsel/rng.hpp"
#include "actsel/tensor.hpp"

namespace actsel::replay {

struct ScoredEntry {
  std::uint64_t id = 0;
  double score = 0.0;
  std::uint64_t inserted_tick = 0;
  bool consumed = false;
};

enum class BankMode { PerSuperbatch, PersistentBank };

struct SamplerConfig {
  double temperature = 1.0;
  BankMode mode = BankMode::PerSuperbatch;
  double spi_target = 0.5;
  void validate() const;
};

// Memory bank of scored candidates. Entries keep their insertion-time scores;
// each entry is sampled at most once. Mutation is serialized on an internal
// mutex so concurrent scorers and one learner can share a bank.
class MemoryBank {
 public:
  explicit MemoryBank(std::size_t capacity, double temperature = 1.0)
      : capacity_(capacity), temperature_(temperature) {}

  void insert(const std::vector<ScoredEntry>& scored_batch);

  // Draws b distinct unconsumed entries without replacement, probability
  // proportional to exp(s_i / temperature), via sequential renormalized
  // draws. Marks them consumed. Throws if fewer than b are available.
  std::vector<std::uint64_t> sample_prioritized(std::size_t b, Rng& rng);

  // Equivalent draw via Gumbel-top-k perturbed scores; used as a cross-check.
  std::vector<std::uint64_t> sample_gumbel_topk(std::size_t b, Rng& rng);

  // Drops every live entry (per-super-batch mode discards the rest).
  void clear_live();

  std::size_t live_unconsumed() const;
  std::uint64_t inserted_total() const;
  std::uint64_t sampled_total() const;
  std::size_t size() const;
  double temperature() const { return temperature_; }

 private:
  void evict_locked();
  std::vector<std::size_t> unconsumed_indices_locked() const;

  mutable std::mutex mu_;
  std::size_t capacity_;
  double temperature_;
  std::deque<ScoredEntry> entries_;
  std::uint64_t inserted_total_ = 0;
  std::uint64_t sampled_total_ = 0;
  std::uint64_t tick_ = 0;
};

// Keeps sampled/inserted near the target ratio: sampling is admitted only
// while (sampled + b) / inserted stays at or below the target (within
// tolerance), insertion only while the bank is not running far ahead.
class SpiController {
 public:
  SpiController(double spi_target, double tolerance = 0.01);

  bool admit_sample(std::uint64_t inserted_count, std::uint64_t sampled_count,
                    std::size_t b) const;
  bool admit_insert(std::uint64_t inserted_count, std::uint64_t sampled_count,
                    std::size_t batch, std::size_t backlog_limit) const;
  double target() const { return target_; }

 private:
  double target_;
  double tolerance_;
};

}  // namespace actsel::replay
