#pragma once

#include <cstddef>
#include <functional>

namespace ulab::kernels {

// Dense double-precision kernels behind the tensor ops. Each kernel has a
// serial reference implementation and an OpenMP variant that partitions work
// by output row. Both variants route every row through the same row routine,
// so results are bit-identical regardless of thread count — this is what the
// kernel tests assert and what keeps training runs reproducible.

// C[m,n] = A[m,k] * B[k,n]
void matmul_serial(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);
void matmul_parallel(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);

// C[m,n] = A[m,k] * B[n,k]^T
void matmul_nt_serial(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);
void matmul_nt_parallel(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);

// C[m,n] = A[k,m]^T * B[k,n]
void matmul_tn_serial(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);
void matmul_tn_parallel(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);

// Dispatching entry points: pick the OpenMP variant when it is enabled and
// the problem is large enough to amortize the fork/join.
void matmul(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);
void matmul_nt(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);
void matmul_tn(size_t m, size_t k, size_t n, const double* a, const double* b, double* c);

bool parallel_enabled();
void set_parallel(bool enabled);

// Runs fn(i) for i in [0, n). Parallel when enabled; each index is processed
// exactly once, so writes to disjoint slots are deterministic.
void parallel_for(size_t n, const std::function<void(size_t)>& fn);

}  // namespace ulab::kernels
