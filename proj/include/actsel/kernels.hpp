#pragma once

#include <cstddef>

#include "actsel/tensor.hpp"

// Data-parallel inner loops for the dense-network stack. Every kernel is
// parallelized over independent output rows only, so results are bit-identical
// to the serial reference regardless of thread count. kernels::serial holds
// the plain-loop reference used by tests and the benchmark.

namespace actsel::kernels {

// C(n,m) = A(n,k) * B(k,m)
void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m);
// C(k,m) = A(n,k)^T * B(n,m)
void matmul_at_b(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t k, std::size_t m);
// C(n,k) = A(n,m) * B(k,m)^T
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t m, std::size_t k);

void add_bias_rows(double* x, const double* bias, std::size_t n, std::size_t m);

// y = act(x), elementwise; dact evaluated from pre-activation x.
void tanh_forward(const double* x, double* y, std::size_t n);
void relu_forward(const double* x, double* y, std::size_t n);
// g_in = g_out * act'(x)
void tanh_backward(const double* x, const double* g_out, double* g_in,
                   std::size_t n);
void relu_backward(const double* x, const double* g_out, double* g_in,
                   std::size_t n);

// Row-wise L2 normalization; norms receives the pre-normalization row norms.
void l2_normalize_rows(double* x, double* norms, std::size_t n, std::size_t m);

namespace serial {
void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m);
void matmul_at_b(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t k, std::size_t m);
void matmul_a_bt(const double* a, const double* b, double* c, std::size_t n,
                 std::size_t m, std::size_t k);
}  // namespace serial

}  // namespace actsel::kernels
