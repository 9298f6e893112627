#include "ulab/kernels.hpp"

#include <atomic>
#include <cstdint>

namespace ulab::kernels {

namespace {

std::atomic<bool> g_parallel{true};

// Work below this many multiply-adds is not worth a fork/join on small cores.
constexpr size_t kParallelThreshold = 48 * 1024;

// Row routines are noinline so the serial and OpenMP drivers execute the very
// same machine code per row; the compiler cannot specialize one path apart
// from the other and break bit-equality.

__attribute__((noinline)) void matmul_row(size_t k, size_t n, const double* a_row,
                                          const double* b, double* c_row) {
    for (size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    for (size_t p = 0; p < k; ++p) {
        const double av = a_row[p];
        const double* b_row = b + p * n;
        for (size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

__attribute__((noinline)) void matmul_nt_row(size_t k, size_t n, const double* a_row,
                                             const double* b, double* c_row) {
    for (size_t j = 0; j < n; ++j) {
        const double* b_row = b + j * k;
        double acc = 0.0;
        for (size_t p = 0; p < k; ++p) acc += a_row[p] * b_row[p];
        c_row[j] = acc;
    }
}

__attribute__((noinline)) void matmul_tn_row(size_t i, size_t m, size_t k, size_t n,
                                             const double* a, const double* b, double* c_row) {
    for (size_t j = 0; j < n; ++j) c_row[j] = 0.0;
    for (size_t p = 0; p < k; ++p) {
        const double av = a[p * m + i];
        const double* b_row = b + p * n;
        for (size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

}  // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

void matmul_serial(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
    for (size_t i = 0; i < m; ++i) matmul_row(k, n, a + i * k, b, c + i * n);
}

void matmul_parallel(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(m); ++i)
        matmul_row(k, n, a + static_cast<size_t>(i) * k, b, c + static_cast<size_t>(i) * n);
}

void matmul_nt_serial(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
    for (size_t i = 0; i < m; ++i) matmul_nt_row(k, n, a + i * k, b, c + i * n);
}

void matmul_nt_parallel(size_t m, size_t k, size_t n, const double* a, const double* b,
                        double* c) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(m); ++i)
        matmul_nt_row(k, n, a + static_cast<size_t>(i) * k, b, c + static_cast<size_t>(i) * n);
}

void matmul_tn_serial(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
    for (size_t i = 0; i < m; ++i) matmul_tn_row(i, m, k, n, a, b, c + i * n);
}

void matmul_tn_parallel(size_t m, size_t k, size_t n, const double* a, const double* b,
                        double* c) {
#pragma omp parallel for schedule(static)
    for (int64_t i = 0; i < static_cast<int64_t>(m); ++i)
        matmul_tn_row(static_cast<size_t>(i), m, k, n, a, b, c + static_cast<size_t>(i) * n);
}

void matmul(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
    if (parallel_enabled() && m > 1 && m * k * n >= kParallelThreshold)
        matmul_parallel(m, k, n, a, b, c);
    else
        matmul_serial(m, k, n, a, b, c);
}

void matmul_nt(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
    if (parallel_enabled() && m > 1 && m * k * n >= kParallelThreshold)
        matmul_nt_parallel(m, k, n, a, b, c);
    else
        matmul_nt_serial(m, k, n, a, b, c);
}

void matmul_tn(size_t m, size_t k, size_t n, const double* a, const double* b, double* c) {
    if (parallel_enabled() && m > 1 && m * k * n >= kParallelThreshold)
        matmul_tn_parallel(m, k, n, a, b, c);
    else
        matmul_tn_serial(m, k, n, a, b, c);
}

void parallel_for(size_t n, const std::function<void(size_t)>& fn) {
    if (parallel_enabled() && n > 1) {
#pragma omp parallel for schedule(dynamic, 1)
        for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) fn(static_cast<size_t>(i));
    } else {
        for (size_t i = 0; i < n; ++i) fn(i);
    }
}

}  // namespace ulab::kernels
