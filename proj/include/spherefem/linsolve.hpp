#pragma once

#include <memory>

#include "spherefem/sparse.hpp"

namespace spherefem {

enum class SpdMethod { direct, cg };

struct SpdOptions {
  SpdMethod method = SpdMethod::direct;
  double tol = 1e-12;  // relative residual bound, verified after the solve
  int maxiter = 20000;
};

std::vector<double> solve_spd(const SparseOperator& A, std::span<const double> b,
                              const SpdOptions& opts = {});

// Reusable Cholesky-type factorization of a symmetric positive definite
// operator (used for the constant blocks of the time-stepping systems and
// for the dual-norm Riesz solves).
class SpdFactor {
 public:
  explicit SpdFactor(const SparseOperator& A);
  ~SpdFactor();
  SpdFactor(SpdFactor&&) noexcept;
  SpdFactor& operator=(SpdFactor&&) noexcept;
  void solve(std::span<const double> b, std::span<double> x) const;
  std::vector<double> solve(std::span<const double> b) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// One linear step of either time integrator:
//
//   [ A  B^T ] [u]   [rhs_u]        A   = diag(node_scale_a (I + alpha S_a))
//   [ B  0   ] [q] = [rhs_q]              + stiff_scale * K per component,
//
// with S_a the skew matrix of the nodal vector skew_axis_a, the multiplier
// column B^T = stack_i diag(coupling^i) * mass, and constraint rows enforcing
// constraint_dir_a . u_a = rhs_q_a at every node. With
// mass_weighted_rows=true the constraint rows are tested against the mass
// matrix instead (an equivalent system, since the mass matrix is
// nonsingular).
struct SaddleSystem {
  int num_nodes = 0;
  int components = 0;
  const SparseOperator* stiffness = nullptr;
  const SparseOperator* mass = nullptr;
  std::span<const double> node_scale;      // per node
  double stiff_scale = 0.0;
  double alpha = 0.0;
  std::span<const double> skew_axis;       // components*num_nodes when alpha > 0
  std::span<const double> coupling;        // components*num_nodes; empty = no constraints
  std::span<const double> constraint_dir;  // components*num_nodes; empty = no constraints
  std::span<const double> rhs_u;           // components*num_nodes
  std::span<const double> rhs_q;           // num_nodes (nodal values)
  bool mass_weighted_rows = false;

  int num_constraints() const { return coupling.empty() ? 0 : num_nodes; }
  void validate() const;
};

enum class SaddleMethod { direct, uzawa };

struct SaddleOptions {
  SaddleMethod method = SaddleMethod::direct;
  double tol = 1e-12;      // relative KKT residual bound
  int uzawa_maxiter = 10000;
};

struct SaddleSolution {
  std::vector<double> u;
  std::vector<double> q;
  double kkt_residual = 0.0;  // relative, measured on the nodal-form system
  int uzawa_iters = 0;
};

// The direct path factorizes the full indefinite block matrix (no symmetry
// assumed, so alpha > 0 is handled). The Uzawa path runs conjugate gradients
// on the dual Schur complement with inner solves on the A block; it requires
// alpha = 0 and nodewise parallel coupling/constraint directions, which both
// integrators satisfy. The A-block factorization is cached across calls with
// identical scales, so repeated steps only pay for the outer iteration.
class SaddleSolver {
 public:
  explicit SaddleSolver(const SaddleOptions& opts = {});
  ~SaddleSolver();
  SaddleSolution solve(const SaddleSystem& sys);
  // Warm start for the next Uzawa solve (e.g. the previous multiplier).
  void set_initial_multiplier(std::span<const double> q0);
  const SaddleOptions& options() const { return opts_; }

  struct Cache;

 private:
  SaddleOptions opts_;
  std::unique_ptr<Cache> cache_;
};

SaddleSolution solve_saddle(const SaddleSystem& sys, const SaddleOptions& opts = {});

}  // namespace spherefem
