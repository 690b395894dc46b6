#pragma once

#include <cstddef>

// Dense row-major kernels behind the autodiff ops.
//
// Every kernel has a parallel and a serial entry point. Both walk the
// reduction index in the same order for each output element, so their
// results are bitwise identical; the thread count never changes a number.
// The naive *_reference versions exist for tests and benchmarks only.
namespace plumbing::nn::kernels {

/// C(m x n) = A(m x k) * B(k x n).
void matmul(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_serial(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_reference(const double* a, const double* b, double* c, int m, int k, int n);

/// C(k x n) += A(m x k)^T * B(m x n); the weight-gradient product.
void matmul_at_b_acc(const double* a, const double* b, double* c, int m, int k, int n);
void matmul_at_b_acc_serial(const double* a, const double* b, double* c, int m, int k, int n);

/// C(m x k) += A(m x n) * B(k x n)^T; the input-gradient product.
void matmul_a_bt_acc(const double* a, const double* b, double* c, int m, int n, int k);
void matmul_a_bt_acc_serial(const double* a, const double* b, double* c, int m, int n, int k);

void transpose(const double* a, double* out, int rows, int cols);

/// Threads the parallel kernels may use (1 inside an enclosing parallel region).
int available_threads();

}  // namespace plumbing::nn::kernels
