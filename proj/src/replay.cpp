#include "actsel/replay.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_set>

namespace actsel::replay {

void SamplerConfig::validate() const {
  if (temperature <= 0.0) throw ConfigError("sampler: temperature must be > 0");
  if (spi_target <= 0.0 || spi_target > 1.0)
    throw ConfigError("sampler: spi_target must be in (0, 1]");
}

void MemoryBank::insert(const std::vector<ScoredEntry>& scored_batch) {
  std::lock_guard<std::mutex> lock(mu_);
  std::unordered_set<std::uint64_t> live;
  for (const ScoredEntry& e : entries_)
    if (!e.consumed) live.insert(e.id);
  for (const ScoredEntry& e : scored_batch) {
    if (!live.insert(e.id).second)
      throw ConfigError("bank: duplicate live id " + std::to_string(e.id));
    ScoredEntry copy = e;
    copy.consumed = false;
    copy.inserted_tick = tick_++;
    entries_.push_back(copy);
    ++inserted_total_;
  }
  evict_locked();
}

void MemoryBank::evict_locked() {
  if (entries_.size() <= capacity_) return;
  // oldest consumed entries go first
  std::deque<ScoredEntry> kept;
  std::size_t to_drop = entries_.size() - capacity_;
  for (const ScoredEntry& e : entries_) {
    if (to_drop > 0 && e.consumed) {
      --to_drop;
    } else {
      kept.push_back(e);
    }
  }
  while (to_drop > 0 && !kept.empty()) {
    kept.pop_front();
    --to_drop;
  }
  entries_ = std::move(kept);
}

std::vector<std::size_t> MemoryBank::unconsumed_indices_locked() const {
  std::vector<std::size_t> idx;
  idx.reserve(entries_.size());
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (!entries_[i].consumed) idx.push_back(i);
  return idx;
}

std::vector<std::uint64_t> MemoryBank::sample_prioritized(std::size_t b,
                                                          Rng& rng) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::size_t> pool = unconsumed_indices_locked();
  if (pool.size() < b)
    throw std::runtime_error("bank: insufficient unconsumed entries (" +
                             std::to_string(pool.size()) + " < " +
                             std::to_string(b) + ")");
  std::vector<std::uint64_t> out;
  out.reserve(b);
  for (std::size_t draw = 0; draw < b; ++draw) {
    double mx = entries_[pool[0]].score;
    for (std::size_t i : pool) mx = std::max(mx, entries_[i].score);
    double total = 0.0;
    std::vector<double> w(pool.size());
    for (std::size_t j = 0; j < pool.size(); ++j) {
      w[j] = std::exp((entries_[pool[j]].score - mx) / temperature_);
      total += w[j];
    }
    const double u = rng.next_double() * total;
    double acc = 0.0;
    std::size_t pick = pool.size() - 1;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      acc += w[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    ScoredEntry& e = entries_[pool[pick]];
    e.consumed = true;
    out.push_back(e.id);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  sampled_total_ += b;
  return out;
}

std::vector<std::uint64_t> MemoryBank::sample_gumbel_topk(std::size_t b,
                                                          Rng& rng) {
  std::lock_guard<std::mutex> lock(mu_);
  std::vector<std::size_t> pool = unconsumed_indices_locked();
  if (pool.size() < b)
    throw std::runtime_error("bank: insufficient unconsumed entries");
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(pool.size());
  for (std::size_t i : pool)
    keyed.emplace_back(entries_[i].score / temperature_ + rng.next_gumbel(), i);
  std::partial_sort(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(b),
                    keyed.end(), [](const auto& a, const auto& c) {
                      return a.first > c.first;
                    });
  std::vector<std::uint64_t> out;
  out.reserve(b);
  for (std::size_t j = 0; j < b; ++j) {
    ScoredEntry& e = entries_[keyed[j].second];
    e.consumed = true;
    out.push_back(e.id);
  }
  sampled_total_ += b;
  return out;
}

void MemoryBank::clear_live() {
  std::lock_guard<std::mutex> lock(mu_);
  entries_.clear();
}

std::size_t MemoryBank::live_unconsumed() const {
  std::lock_guard<std::mutex> lock(mu_);
  std::size_t n = 0;
  for (const ScoredEntry& e : entries_)
    if (!e.consumed) ++n;
  return n;
}

std::uint64_t MemoryBank::inserted_total() const {
  std::lock_guard<std::mutex> lock(mu_);
  return inserted_total_;
}

std::uint64_t MemoryBank::sampled_total() const {
  std::lock_guard<std::mutex> lock(mu_);
  return sampled_total_;
}

std::size_t MemoryBank::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return entries_.size();
}

SpiController::SpiController(double spi_target, double tolerance)
    : target_(spi_target), tolerance_(tolerance) {
  if (spi_target <= 0.0 || spi_target > 1.0)
    throw ConfigError("spi: target must be in (0, 1]");
}

bool SpiController::admit_sample(std::uint64_t inserted_count,
                                 std::uint64_t sampled_count,
                                 std::size_t b) const {
  const double after = static_cast<double>(sampled_count + b);
  return after <= target_ * static_cast<double>(inserted_count) + 1e-9;
}

bool SpiController::admit_insert(std::uint64_t inserted_count,
                                 std::uint64_t sampled_count, std::size_t batch,
                                 std::size_t backlog_limit) const {
  const double allowed = static_cast<double>(sampled_count) / target_ +
                         static_cast<double>(backlog_limit);
  return static_cast<double>(inserted_count + batch) <= allowed + 1e-9;
}

}  // namespace actsel::replay
