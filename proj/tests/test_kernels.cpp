#include <cstring>
#include <vector>

#include "actsel/kernels.hpp"
#include "actsel/rng.hpp"
#include "doctest.h"

using namespace actsel;

namespace {

std::vector<double> random_vec(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_normal();
  return v;
}

}  // namespace

TEST_CASE("parallel matmul is bit-identical to the serial reference") {
  Rng rng(7);
  const std::size_t shapes[][3] = {
      {1, 1, 1}, {3, 5, 2}, {17, 13, 31}, {64, 64, 64}, {100, 1, 100}};
  for (const auto& shape : shapes) {
    const std::size_t n = shape[0], k = shape[1], m = shape[2];
    auto a = random_vec(n * k, rng);
    auto b = random_vec(k * m, rng);
    std::vector<double> c_par(n * m), c_ser(n * m);
    kernels::matmul(a.data(), b.data(), c_par.data(), n, k, m);
    kernels::serial::matmul(a.data(), b.data(), c_ser.data(), n, k, m);
    CHECK(std::memcmp(c_par.data(), c_ser.data(), n * m * sizeof(double)) == 0);
  }
}

TEST_CASE("transposed matmuls are bit-identical to the serial reference") {
  Rng rng(8);
  const std::size_t n = 23, k = 11, m = 19;
  auto a = random_vec(n * k, rng);
  auto b = random_vec(n * m, rng);
  std::vector<double> c_par(k * m), c_ser(k * m);
  kernels::matmul_at_b(a.data(), b.data(), c_par.data(), n, k, m);
  kernels::serial::matmul_at_b(a.data(), b.data(), c_ser.data(), n, k, m);
  CHECK(std::memcmp(c_par.data(), c_ser.data(), k * m * sizeof(double)) == 0);

  auto a2 = random_vec(n * m, rng);
  auto b2 = random_vec(k * m, rng);
  std::vector<double> d_par(n * k), d_ser(n * k);
  kernels::matmul_a_bt(a2.data(), b2.data(), d_par.data(), n, m, k);
  kernels::serial::matmul_a_bt(a2.data(), b2.data(), d_ser.data(), n, m, k);
  CHECK(std::memcmp(d_par.data(), d_ser.data(), n * k * sizeof(double)) == 0);
}

TEST_CASE("matmul matches a hand-computed 2x2 product") {
  // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
  double a[4] = {1, 2, 3, 4};
  double b[4] = {5, 6, 7, 8};
  double c[4];
  kernels::matmul(a, b, c, 2, 2, 2);
  CHECK(c[0] == 19.0);
  CHECK(c[1] == 22.0);
  CHECK(c[2] == 43.0);
  CHECK(c[3] == 50.0);
}

TEST_CASE("matmul_at_b equals matmul applied to the explicit transpose") {
  Rng rng(9);
  const std::size_t n = 12, k = 7, m = 9;
  auto a = random_vec(n * k, rng);
  auto b = random_vec(n * m, rng);
  std::vector<double> at(k * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) at[j * n + i] = a[i * k + j];
  std::vector<double> via_t(k * m), direct(k * m);
  kernels::matmul(at.data(), b.data(), via_t.data(), k, n, m);
  kernels::matmul_at_b(a.data(), b.data(), direct.data(), n, k, m);
  for (std::size_t i = 0; i < k * m; ++i)
    CHECK(direct[i] == doctest::Approx(via_t[i]).epsilon(1e-12));
}

TEST_CASE("activations and bias add") {
  double x[4] = {-2.0, -0.5, 0.0, 3.0};
  double y[4];
  kernels::relu_forward(x, y, 4);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == 0.0);
  CHECK(y[2] == 0.0);
  CHECK(y[3] == 3.0);

  kernels::tanh_forward(x, y, 4);
  CHECK(y[3] == doctest::Approx(std::tanh(3.0)));

  double g_out[4] = {1.0, 1.0, 1.0, 1.0};
  double g_in[4];
  kernels::relu_backward(x, g_out, g_in, 4);
  CHECK(g_in[0] == 0.0);
  CHECK(g_in[3] == 1.0);
  kernels::tanh_backward(x, g_out, g_in, 4);
  const double t = std::tanh(3.0);
  CHECK(g_in[3] == doctest::Approx(1.0 - t * t));

  double rows[6] = {0, 0, 0, 1, 1, 1};
  double bias[3] = {1, 2, 3};
  kernels::add_bias_rows(rows, bias, 2, 3);
  CHECK(rows[0] == 1.0);
  CHECK(rows[5] == 4.0);
}

TEST_CASE("row L2 normalization returns unit rows and the original norms") {
  double x[6] = {3, 4, 0, 0, 0, 2};
  double norms[2];
  kernels::l2_normalize_rows(x, norms, 2, 3);
  CHECK(norms[0] == doctest::Approx(5.0));
  CHECK(norms[1] == doctest::Approx(2.0));
  CHECK(x[0] == doctest::Approx(0.6));
  CHECK(x[1] == doctest::Approx(0.8));
  CHECK(x[5] == doctest::Approx(1.0));
}
