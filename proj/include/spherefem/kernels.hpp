#pragma once

#include "spherefem/sparse.hpp"

namespace spherefem::kernels {

// Reduction kernels use a fixed chunk decomposition (chunk partial sums
// combined in index order), so results are bitwise identical for any thread
// count. The serial:: variants implement the same summation order without
// OpenMP and must agree bitwise with the parallel ones; tests rely on this.

inline constexpr int kChunk = 2048;

double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);        // y += a*x
void scale_add(double a, std::span<const double> x, double b,
               std::span<const double> y, std::span<double> out);            // out = a*x + b*y
void spmv(const SparseOperator& A, std::span<const double> x, std::span<double> y);

namespace serial {
double sum(std::span<const double> x);
double dot(std::span<const double> x, std::span<const double> y);
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale_add(double a, std::span<const double> x, double b,
               std::span<const double> y, std::span<double> out);
void spmv(const SparseOperator& A, std::span<const double> x, std::span<double> y);
}  // namespace serial

}  // namespace spherefem::kernels
