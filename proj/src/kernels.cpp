#include "spherefem/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spherefem::kernels {

namespace {

inline double chunk_dot(const double* x, const double* y, std::ptrdiff_t n) {
  double s = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

inline double chunk_sum(const double* x, std::ptrdiff_t n) {
  double s = 0.0;
  for (std::ptrdiff_t i = 0; i < n; ++i) s += x[i];
  return s;
}

inline double combine(const std::vector<double>& partials) {
  double s = 0.0;
  for (double p : partials) s += p;
  return s;
}

inline std::ptrdiff_t num_chunks(std::size_t n) {
  return static_cast<std::ptrdiff_t>((n + kChunk - 1) / kChunk);
}

}  // namespace

double dot(std::span<const double> x, std::span<const double> y) {
  const std::ptrdiff_t nc = num_chunks(x.size());
  std::vector<double> partials(static_cast<std::size_t>(nc));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const std::ptrdiff_t begin = c * kChunk;
    const std::ptrdiff_t len =
        std::min<std::ptrdiff_t>(kChunk, static_cast<std::ptrdiff_t>(x.size()) - begin);
    partials[static_cast<std::size_t>(c)] = chunk_dot(x.data() + begin, y.data() + begin, len);
  }
  return combine(partials);
}

double sum(std::span<const double> x) {
  const std::ptrdiff_t nc = num_chunks(x.size());
  std::vector<double> partials(static_cast<std::size_t>(nc));
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const std::ptrdiff_t begin = c * kChunk;
    const std::ptrdiff_t len =
        std::min<std::ptrdiff_t>(kChunk, static_cast<std::ptrdiff_t>(x.size()) - begin);
    partials[static_cast<std::size_t>(c)] = chunk_sum(x.data() + begin, len);
  }
  return combine(partials);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_add(double a, std::span<const double> x, double b, std::span<const double> y,
               std::span<double> out) {
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void spmv(const SparseOperator& A, std::span<const double> x, std::span<double> y) {
  const std::ptrdiff_t n = A.rows;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
      s += A.values[p] * x[A.col_idx[p]];
    y[r] = s;
  }
}

namespace serial {

double dot(std::span<const double> x, std::span<const double> y) {
  const std::ptrdiff_t nc = num_chunks(x.size());
  double s = 0.0;
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const std::ptrdiff_t begin = c * kChunk;
    const std::ptrdiff_t len =
        std::min<std::ptrdiff_t>(kChunk, static_cast<std::ptrdiff_t>(x.size()) - begin);
    s += chunk_dot(x.data() + begin, y.data() + begin, len);
  }
  return s;
}

double sum(std::span<const double> x) {
  const std::ptrdiff_t nc = num_chunks(x.size());
  double s = 0.0;
  for (std::ptrdiff_t c = 0; c < nc; ++c) {
    const std::ptrdiff_t begin = c * kChunk;
    const std::ptrdiff_t len =
        std::min<std::ptrdiff_t>(kChunk, static_cast<std::ptrdiff_t>(x.size()) - begin);
    s += chunk_sum(x.data() + begin, len);
  }
  return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale_add(double a, std::span<const double> x, double b, std::span<const double> y,
               std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = a * x[i] + b * y[i];
}

void spmv(const SparseOperator& A, std::span<const double> x, std::span<double> y) {
  for (int r = 0; r < A.rows; ++r) {
    double s = 0.0;
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
      s += A.values[p] * x[A.col_idx[p]];
    y[r] = s;
  }
}

}  // namespace serial

}  // namespace spherefem::kernels
