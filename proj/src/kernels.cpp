#include "actsel/kernels.hpp"

#include <cmath>

namespace actsel::kernels {

void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m) {
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] = 0.0;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_at_b(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t k, std::size_t m) {
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(k); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double av = a[p * k + i];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_a_bt(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t m, std::size_t k) {
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    const double* arow = a + i * m;
    double* crow = c + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double* brow = b + j * m;
      double acc = 0.0;
      for (std::size_t p = 0; p < m; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
}

void add_bias_rows(double* x, const double* bias, std::size_t n,
                   std::size_t m) {
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
    double* row = x + static_cast<std::size_t>(ii) * m;
    for (std::size_t j = 0; j < m; ++j) row[j] += bias[j];
  }
}

void tanh_forward(const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) y[i] = std::tanh(x[i]);
}

void relu_forward(const double* x, double* y, std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void tanh_backward(const double* x, const double* g_out, double* g_in,
                   std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    const double t = std::tanh(x[i]);
    g_in[i] = g_out[i] * (1.0 - t * t);
  }
}

void relu_backward(const double* x, const double* g_out, double* g_in,
                   std::size_t n) {
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(n); ++i)
    g_in[i] = x[i] > 0.0 ? g_out[i] : 0.0;
}

void l2_normalize_rows(double* x, double* norms, std::size_t n,
                       std::size_t m) {
#pragma omp parallel for schedule(static)
  for (long long ii = 0; ii < static_cast<long long>(n); ++ii) {
    double* row = x + static_cast<std::size_t>(ii) * m;
    double sq = 0.0;
    for (std::size_t j = 0; j < m; ++j) sq += row[j] * row[j];
    const double nrm = std::sqrt(sq);
    norms[ii] = nrm;
    if (nrm > 0.0) {
      const double inv = 1.0 / nrm;
      for (std::size_t j = 0; j < m; ++j) row[j] *= inv;
    }
  }
}

namespace serial {

void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) {
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] = 0.0;
    const double* arow = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = arow[p];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_at_b(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t k, std::size_t m) {
  for (std::size_t i = 0; i < k; ++i) {
    double* crow = c + i * m;
    for (std::size_t j = 0; j < m; ++j) crow[j] = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double av = a[p * k + i];
      const double* brow = b + p * m;
      for (std::size_t j = 0; j < m; ++j) crow[j] += av * brow[j];
    }
  }
}

void matmul_a_bt(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t m, std::size_t k) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* arow = a + i * m;
    double* crow = c + i * k;
    for (std::size_t j = 0; j < k; ++j) {
      const double* brow = b + j * m;
      double acc = 0.0;
      for (std::size_t p = 0; p < m; ++p) acc += arow[p] * brow[p];
      crow[j] = acc;
    }
  }
}

}  // namespace serial

}  // namespace actsel::kernels
