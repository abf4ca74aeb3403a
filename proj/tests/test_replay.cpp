#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "actsel/replay.hpp"
#include "actsel/rng.hpp"
#include "doctest.h"

using namespace actsel;

namespace {

std::vector<replay::ScoredEntry> entries(const std::vector<double>& scores) {
  std::vector<replay::ScoredEntry> out;
  for (std::size_t i = 0; i < scores.size(); ++i)
    out.push_back({static_cast<std::uint64_t>(i), scores[i], 0, false});
  return out;
}

// Draws one prioritized sample per fresh bank, counts ids.
std::vector<std::size_t> count_single_draws(const std::vector<double>& scores,
                                            std::size_t n_draws,
                                            std::uint64_t seed,
                                            bool gumbel = false) {
  std::vector<std::size_t> counts(scores.size(), 0);
  Rng rng(seed);
  for (std::size_t t = 0; t < n_draws; ++t) {
    replay::MemoryBank bank(scores.size(), 1.0);
    bank.insert(entries(scores));
    auto ids = gumbel ? bank.sample_gumbel_topk(1, rng)
                      : bank.sample_prioritized(1, rng);
    ++counts[ids[0]];
  }
  return counts;
}

double chi_square(const std::vector<std::size_t>& counts,
                  const std::vector<double>& probs, std::size_t n) {
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double expected = probs[i] * static_cast<double>(n);
    const double diff = static_cast<double>(counts[i]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

std::vector<double> softmax(const std::vector<double>& s) {
  double mx = s[0];
  for (double v : s) mx = std::max(mx, v);
  std::vector<double> p(s.size());
  double z = 0;
  for (std::size_t i = 0; i < s.size(); ++i) z += p[i] = std::exp(s[i] - mx);
  for (double& v : p) v /= z;
  return p;
}

// 0.01 upper-tail chi-square critical values by degrees of freedom.
constexpr double kChi2Crit1 = 6.635;
constexpr double kChi2Crit3 = 11.345;

}  // namespace

TEST_CASE("softmax sampling matches analytic probabilities (equal scores)") {
  const std::size_t n = 100000;
  std::vector<double> scores = {0.7, 0.7, 0.7, 0.7};
  auto counts = count_single_draws(scores, n, 2024);
  CHECK(chi_square(counts, {0.25, 0.25, 0.25, 0.25}, n) < kChi2Crit3);
}

TEST_CASE("softmax sampling matches analytic probabilities ({ln 2, 0})") {
  const std::size_t n = 100000;
  std::vector<double> scores = {std::log(2.0), 0.0};
  auto counts = count_single_draws(scores, n, 2025);
  CHECK(chi_square(counts, {2.0 / 3.0, 1.0 / 3.0}, n) < kChi2Crit1);
}

TEST_CASE("gumbel top-k variant draws from the same distribution") {
  const std::size_t n = 100000;
  std::vector<double> scores = {std::log(2.0), 0.0};
  auto counts = count_single_draws(scores, n, 2026, /*gumbel=*/true);
  CHECK(chi_square(counts, {2.0 / 3.0, 1.0 / 3.0}, n) < kChi2Crit1);
}

TEST_CASE("without-replacement joint law matches exhaustive enumeration") {
  // n = 3, b = 2: P{i,j} = p_i p_j / (1 - p_i) + p_j p_i / (1 - p_j).
  std::vector<double> scores = {1.0, 0.3, -0.5};
  auto p = softmax(scores);
  std::map<std::pair<int, int>, double> exact;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      exact[{std::min(i, j), std::max(i, j)}] += p[i] * p[j] / (1.0 - p[i]);
    }

  const std::size_t n_draws = 200000;
  std::map<std::pair<int, int>, double> emp;
  Rng rng(31337);
  for (std::size_t t = 0; t < n_draws; ++t) {
    replay::MemoryBank bank(3, 1.0);
    bank.insert(entries(scores));
    auto ids = bank.sample_prioritized(2, rng);
    const int lo = static_cast<int>(std::min(ids[0], ids[1]));
    const int hi = static_cast<int>(std::max(ids[0], ids[1]));
    emp[{lo, hi}] += 1.0 / static_cast<double>(n_draws);
  }
  double tv = 0.0;
  for (const auto& [key, prob] : exact) tv += std::fabs(prob - emp[key]);
  CHECK(tv / 2.0 < 0.005);
}

TEST_CASE("softmax sampling is shift invariant") {
  const std::size_t n = 100000;
  std::vector<double> scores = {std::log(2.0), 0.0};
  std::vector<double> shifted = {std::log(2.0) + 17.5, 17.5};
  auto counts = count_single_draws(shifted, n, 2027);
  // shifted draws still follow the unshifted analytic law
  CHECK(chi_square(counts, {2.0 / 3.0, 1.0 / 3.0}, n) < kChi2Crit1);
}

TEST_CASE("every entry is sampled at most once") {
  replay::MemoryBank bank(1024, 1.0);
  Rng rng(7);
  Rng score_rng(8);
  std::set<std::uint64_t> seen;
  std::uint64_t next_id = 0;
  for (int round = 0; round < 50; ++round) {
    std::vector<replay::ScoredEntry> batch;
    for (int j = 0; j < 16; ++j)
      batch.push_back({next_id++, score_rng.next_normal(), 0, false});
    bank.insert(batch);
    auto ids = bank.sample_prioritized(8, rng);
    for (auto id : ids) CHECK(seen.insert(id).second);
  }
  CHECK(bank.sampled_total() == 50 * 8);
  CHECK(bank.inserted_total() == 50 * 16);
}

TEST_CASE("sampling more than the live pool throws") {
  replay::MemoryBank bank(8, 1.0);
  bank.insert(entries({0.0, 0.0, 0.0}));
  Rng rng(1);
  (void)bank.sample_prioritized(2, rng);
  CHECK(bank.live_unconsumed() == 1);
  CHECK_THROWS(bank.sample_prioritized(2, rng));
}

TEST_CASE("clear_live drops unconsumed entries") {
  replay::MemoryBank bank(64, 1.0);
  bank.insert(entries({1.0, 2.0, 3.0, 4.0}));
  Rng rng(2);
  (void)bank.sample_prioritized(2, rng);
  bank.clear_live();
  CHECK(bank.live_unconsumed() == 0);
  CHECK_THROWS(bank.sample_prioritized(1, rng));
}

TEST_CASE("capacity bound holds under sustained insertion") {
  replay::MemoryBank bank(32, 1.0);
  std::uint64_t next_id = 0;
  for (int round = 0; round < 10; ++round) {
    std::vector<replay::ScoredEntry> batch;
    for (int j = 0; j < 16; ++j) batch.push_back({next_id++, 0.0, 0, false});
    bank.insert(batch);
    CHECK(bank.size() <= 32);
  }
  CHECK(bank.inserted_total() == 160);
}

TEST_CASE("SPI controller holds the sampled/inserted ratio near target") {
  replay::SpiController spi(0.5);
  const std::size_t big_b = 64, b = 32;
  std::uint64_t inserted = 0, sampled = 0;
  Rng rng(99);
  for (int it = 0; it < 20000; ++it) {
    // Random interleaving of eager producers and an eager consumer.
    if (rng.next_below(2) == 0) {
      if (spi.admit_insert(inserted, sampled, big_b, /*backlog_limit=*/4 * big_b))
        inserted += big_b;
    } else {
      if (spi.admit_sample(inserted, sampled, b)) sampled += b;
    }
  }
  REQUIRE(inserted > 0);
  const double ratio =
      static_cast<double>(sampled) / static_cast<double>(inserted);
  CHECK(ratio == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("SPI controller blocks sampling ahead of insertion") {
  replay::SpiController spi(0.5);
  CHECK_FALSE(spi.admit_sample(/*inserted=*/32, /*sampled=*/0, /*b=*/32));
  CHECK(spi.admit_sample(/*inserted=*/64, /*sampled=*/0, /*b=*/32));
  CHECK_FALSE(spi.admit_sample(/*inserted=*/64, /*sampled=*/32, /*b=*/32));
}
