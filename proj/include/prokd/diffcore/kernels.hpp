#pragma once

#include <cstddef>

// Dense row-wise kernels behind the differentiable primitives.
//
// Every kernel exists twice: `serial::` is the reference loop nest and
// `parallel::` distributes output rows over OpenMP threads. Each output element
// is produced by the same per-row routine in both, so results are bit-identical
// regardless of thread count. The functions directly in `prokd::kernels`
// dispatch on the process-wide policy.
//
// Shapes unless noted: a is n x k, b is k x m, out is n x m (overwritten).

namespace prokd::kernels {

enum class Policy { serial, parallel };

void set_policy(Policy p) noexcept;
Policy policy() noexcept;

namespace serial {
void matmul(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
            std::size_t m);
// out (n x m) = a^T b with a: k x n, b: k x m.
void matmul_tn(const double* a, const double* b, double* out, std::size_t k, std::size_t n,
               std::size_t m);
// out (n x m) = a b^T with a: n x k, b: m x k.
void matmul_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m);
void softmax_rows(const double* x, double* out, std::size_t n, std::size_t m);
// Returns false if some row has zero norm.
bool l2_normalize_rows(const double* x, double* out, double* norms, std::size_t n, std::size_t m);
// out (n x m) = ||a_i - b_j|| with a: n x d, b: m x d.
void pairwise_distance(const double* a, const double* b, double* out, std::size_t n,
                       std::size_t m, std::size_t d);
void tanh(const double* x, double* out, std::size_t count);
}  // namespace serial

namespace parallel {
void matmul(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
            std::size_t m);
// out (n x m) = a^T b with a: k x n, b: k x m.
void matmul_tn(const double* a, const double* b, double* out, std::size_t k, std::size_t n,
               std::size_t m);
// out (n x m) = a b^T with a: n x k, b: m x k.
void matmul_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m);
void softmax_rows(const double* x, double* out, std::size_t n, std::size_t m);
// Returns false if some row has zero norm.
bool l2_normalize_rows(const double* x, double* out, double* norms, std::size_t n, std::size_t m);
// out (n x m) = ||a_i - b_j|| with a: n x d, b: m x d.
void pairwise_distance(const double* a, const double* b, double* out, std::size_t n,
                       std::size_t m, std::size_t d);
void tanh(const double* x, double* out, std::size_t count);
}  // namespace parallel

void matmul(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
            std::size_t m);
// out (n x m) = a^T b with a: k x n, b: k x m.
void matmul_tn(const double* a, const double* b, double* out, std::size_t k, std::size_t n,
               std::size_t m);
// out (n x m) = a b^T with a: n x k, b: m x k.
void matmul_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m);
void softmax_rows(const double* x, double* out, std::size_t n, std::size_t m);
// Returns false if some row has zero norm.
bool l2_normalize_rows(const double* x, double* out, double* norms, std::size_t n, std::size_t m);
// out (n x m) = ||a_i - b_j|| with a: n x d, b: m x d.
void pairwise_distance(const double* a, const double* b, double* out, std::size_t n,
                       std::size_t m, std::size_t d);
void tanh(const double* x, double* out, std::size_t count);

}  // namespace prokd::kernels
