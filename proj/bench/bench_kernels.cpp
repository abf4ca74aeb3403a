// Times the OpenMP kernels against the serial reference and checks the
// results are bit-identical. Run with OMP_NUM_THREADS to vary parallelism.
#include <chrono>
#include <cstdio>
#include <cstring>
#include <vector>

#include "actsel/kernels.hpp"
#include "actsel/rng.hpp"

namespace {

using namespace actsel;
using Clock = std::chrono::steady_clock;

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_normal();
  return v;
}

template <typename F>
double time_ms(F&& fn, int reps) {
  const auto start = Clock::now();
  for (int i = 0; i < reps; ++i) fn();
  const auto stop = Clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         reps;
}

}  // namespace

int main() {
  Rng rng(42);
  const std::size_t sizes[][3] = {
      {64, 64, 64}, {256, 256, 256}, {512, 128, 512}, {1024, 64, 1024}};
  const int reps = 5;
  std::printf("%-18s %12s %12s %8s %s\n", "matmul n,k,m", "serial ms",
              "omp ms", "speedup", "bits");
  for (const auto& s : sizes) {
    const std::size_t n = s[0], k = s[1], m = s[2];
    const std::vector<double> a = random_vec(n * k, rng);
    const std::vector<double> b = random_vec(k * m, rng);
    std::vector<double> c_serial(n * m), c_omp(n * m);
    const double t_serial = time_ms(
        [&] {
          kernels::serial::matmul(a.data(), b.data(), c_serial.data(), n, k, m);
        },
        reps);
    const double t_omp = time_ms(
        [&] { kernels::matmul(a.data(), b.data(), c_omp.data(), n, k, m); },
        reps);
    const bool same = std::memcmp(c_serial.data(), c_omp.data(),
                                  n * m * sizeof(double)) == 0;
    std::printf("%5zu,%4zu,%4zu  %12.3f %12.3f %7.2fx %s\n", n, k, m, t_serial,
                t_omp, t_serial / t_omp, same ? "identical" : "DIFFER");
  }
  return 0;
}
