#include "prokd/diffcore/kernels.hpp"

#include <atomic>
#include <cmath>

namespace prokd::kernels {

namespace {

std::atomic<Policy> g_policy{Policy::parallel};

// Below this much per-call work the OpenMP fork costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 14;

// Per-row routines. Both execution policies call exactly these.

inline void matmul_row(const double* a_row, const double* b, double* out_row, std::size_t k,
                       std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) out_row[j] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_row[p];
    const double* b_row = b + p * m;
    for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
  }
}

inline void matmul_tn_row(const double* a, const double* b, double* out_row, std::size_t i,
                          std::size_t k, std::size_t n, std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) out_row[j] = 0.0;
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a[p * n + i];
    const double* b_row = b + p * m;
    for (std::size_t j = 0; j < m; ++j) out_row[j] += av * b_row[j];
  }
}

inline void matmul_nt_row(const double* a_row, const double* b, double* out_row, std::size_t k,
                          std::size_t m) {
  for (std::size_t j = 0; j < m; ++j) {
    const double* b_row = b + j * k;
    double s = 0.0;
    for (std::size_t p = 0; p < k; ++p) s += a_row[p] * b_row[p];
    out_row[j] = s;
  }
}

inline void softmax_row(const double* x, double* out, std::size_t m) {
  double mx = x[0];
  for (std::size_t j = 1; j < m; ++j) mx = x[j] > mx ? x[j] : mx;
  double z = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    out[j] = std::exp(x[j] - mx);
    z += out[j];
  }
  for (std::size_t j = 0; j < m; ++j) out[j] /= z;
}

inline bool l2_normalize_row(const double* x, double* out, double* norm, std::size_t m) {
  double s = 0.0;
  for (std::size_t j = 0; j < m; ++j) s += x[j] * x[j];
  const double nrm = std::sqrt(s);
  *norm = nrm;
  if (!(nrm > 0.0)) return false;
  for (std::size_t j = 0; j < m; ++j) out[j] = x[j] / nrm;
  return true;
}

inline void distance_row(const double* a_row, const double* b, double* out_row, std::size_t m,
                         std::size_t d) {
  for (std::size_t j = 0; j < m; ++j) {
    const double* b_row = b + j * d;
    double s = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      const double diff = a_row[p] - b_row[p];
      s += diff * diff;
    }
    out_row[j] = std::sqrt(s);
  }
}

}  // namespace

void set_policy(Policy p) noexcept { g_policy.store(p); }
Policy policy() noexcept { return g_policy.load(); }

namespace serial {

void matmul(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
            std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) matmul_row(a + i * k, b, out + i * m, k, m);
}

void matmul_tn(const double* a, const double* b, double* out, std::size_t k, std::size_t n,
               std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) matmul_tn_row(a, b, out + i * m, i, k, n, m);
}

void matmul_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) matmul_nt_row(a + i * k, b, out + i * m, k, m);
}

void softmax_rows(const double* x, double* out, std::size_t n, std::size_t m) {
  for (std::size_t i = 0; i < n; ++i) softmax_row(x + i * m, out + i * m, m);
}

bool l2_normalize_rows(const double* x, double* out, double* norms, std::size_t n, std::size_t m) {
  bool ok = true;
  for (std::size_t i = 0; i < n; ++i) ok = l2_normalize_row(x + i * m, out + i * m, norms + i, m) && ok;
  return ok;
}

void pairwise_distance(const double* a, const double* b, double* out, std::size_t n,
                       std::size_t m, std::size_t d) {
  for (std::size_t i = 0; i < n; ++i) distance_row(a + i * d, b, out + i * m, m, d);
}

void tanh(const double* x, double* out, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) out[i] = std::tanh(x[i]);
}

}  // namespace serial

namespace parallel {

void matmul(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
            std::size_t m) {
  const auto rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelWork)
  for (long i = 0; i < rows; ++i) matmul_row(a + i * k, b, out + i * m, k, m);
}

void matmul_tn(const double* a, const double* b, double* out, std::size_t k, std::size_t n,
               std::size_t m) {
  const auto rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelWork)
  for (long i = 0; i < rows; ++i) matmul_tn_row(a, b, out + i * m, i, k, n, m);
}

void matmul_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m) {
  const auto rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * k * m > kParallelWork)
  for (long i = 0; i < rows; ++i) matmul_nt_row(a + i * k, b, out + i * m, k, m);
}

void softmax_rows(const double* x, double* out, std::size_t n, std::size_t m) {
  const auto rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * m > kParallelWork)
  for (long i = 0; i < rows; ++i) softmax_row(x + i * m, out + i * m, m);
}

bool l2_normalize_rows(const double* x, double* out, double* norms, std::size_t n, std::size_t m) {
  const auto rows = static_cast<long>(n);
  int bad = 0;
#pragma omp parallel for schedule(static) reduction(+ : bad) if (n * m > kParallelWork)
  for (long i = 0; i < rows; ++i) bad += l2_normalize_row(x + i * m, out + i * m, norms + i, m) ? 0 : 1;
  return bad == 0;
}

void pairwise_distance(const double* a, const double* b, double* out, std::size_t n,
                       std::size_t m, std::size_t d) {
  const auto rows = static_cast<long>(n);
#pragma omp parallel for schedule(static) if (n * m * d > kParallelWork)
  for (long i = 0; i < rows; ++i) distance_row(a + i * d, b, out + i * m, m, d);
}

void tanh(const double* x, double* out, std::size_t count) {
  const auto total = static_cast<long>(count);
#pragma omp parallel for schedule(static) if (count > kParallelWork)
  for (long i = 0; i < total; ++i) out[i] = std::tanh(x[i]);
}

}  // namespace parallel

#define PROKD_DISPATCH(call) \
  (policy() == Policy::parallel ? parallel::call : serial::call)

void matmul(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
            std::size_t m) {
  PROKD_DISPATCH(matmul(a, b, out, n, k, m));
}
void matmul_tn(const double* a, const double* b, double* out, std::size_t k, std::size_t n,
               std::size_t m) {
  PROKD_DISPATCH(matmul_tn(a, b, out, k, n, m));
}
void matmul_nt(const double* a, const double* b, double* out, std::size_t n, std::size_t k,
               std::size_t m) {
  PROKD_DISPATCH(matmul_nt(a, b, out, n, k, m));
}
void softmax_rows(const double* x, double* out, std::size_t n, std::size_t m) {
  PROKD_DISPATCH(softmax_rows(x, out, n, m));
}
bool l2_normalize_rows(const double* x, double* out, double* norms, std::size_t n, std::size_t m) {
  return PROKD_DISPATCH(l2_normalize_rows(x, out, norms, n, m));
}
void pairwise_distance(const double* a, const double* b, double* out, std::size_t n,
                       std::size_t m, std::size_t d) {
  PROKD_DISPATCH(pairwise_distance(a, b, out, n, m, d));
}
void tanh(const double* x, double* out, std::size_t count) { PROKD_DISPATCH(tanh(x, out, count)); }

#undef PROKD_DISPATCH

}  // namespace prokd::kernels
