#pragma once

#include <optional>

#include "spherefem/assembly.hpp"
#include "spherefem/linsolve.hpp"

namespace spherefem {

// Closed-form solution of the 2D heat-flow problem on (-1,1)^2 used for
// convergence studies: the director is (cos theta, sin theta) with
// theta = amplitude * exp(-gamma (kx^2+ky^2) t) cos(kx x) cos(ky y), and the
// multiplier is -|grad theta|^2.
struct SmoothTestProblem {
  double amplitude = M_PI;
  double kx = M_PI;
  double ky = 2.0 * M_PI;
  double gamma = 0.01;

  double theta(const Vec3& x, double t) const;
  Vec3 grad_theta(const Vec3& x, double t) const;
  Vec3 u(const Vec3& x, double t) const;
  // Rows of the exact Jacobian of u (component c, derivative d).
  std::array<Vec3, 2> grad_u(const Vec3& x, double t) const;
  double q(const Vec3& x, double t) const;

  PointFn u_fn(double t) const;
  PointFn q_fn(double t) const;
};

// Two repelling point defects on the x axis: a logistic blend of
// (x + d e1) and -(x - d e1), normalized. Singular where the blend vanishes.
struct SingularIC {
  double delta = 0.0625;
  int dim = 2;

  static double blend(double x) { return 1.0 / (1.0 + std::exp(5.0 * x)); }
  Vec3 raw(const Vec3& x) const;       // unnormalized blend field
  Vec3 eval(const Vec3& x) const;      // normalized; throws at a blend zero
  PointFn fn() const;
};

struct NormSet {
  double l1 = 0.0, l2 = 0.0, linf = 0.0, h1 = 0.0;
};

// Quadrature errors against the closed form; the max-norm samples quadrature
// points and vertices. h1 is the full norm (L2 part included).
NormSet error_norms_u(const NodalField& u_h, const SmoothTestProblem& problem, double t,
                      int quad_degree = 4);
NormSet error_norms_q(const NodalField& q_h, const SmoothTestProblem& problem, double t,
                      int quad_degree = 4);

// Dual-norm estimate of q - q_h: the Riesz representative is projected onto
// the interior-vertex subspace, solving (grad r, grad f) = (q - q_h, f) for
// every interior basis function; the value is |grad r|. Throws when the mesh
// has no interior vertices.
double negnorm_q(const NodalField& q_h, const SmoothTestProblem& problem, double t,
                 const SparseOperator& stiffness, const SparseOperator& mass,
                 int quad_degree = 4);

// Same dual norm for a plain discrete functional (no closed form): the right
// side is (q_h, f), integrated exactly through the mass matrix.
double negnorm_field(const NodalField& q_h, const SparseOperator& stiffness,
                     const SparseOperator& mass);

// Reusable interior-stiffness factorization for per-step dual norms.
class NegnormWorkspace {
 public:
  NegnormWorkspace(const Mesh& mesh, const SparseOperator& stiffness);
  bool valid() const { return !interior_.empty(); }
  // rhs indexed by vertex; only interior entries are read.
  double apply(std::span<const double> rhs) const;
  std::span<const int> interior() const { return interior_; }

 private:
  std::vector<int> interior_;
  SparseOperator interior_stiffness_;
  std::optional<SpdFactor> factor_;
};

// rate_i = log2(e_{i-1} / e_i) for a halving refinement sequence; entries
// where a ratio is undefined come back as nullopt.
std::vector<std::optional<double>> convergence_rates(std::span<const double> errors);

struct RhoEstimate {
  double rho = 0.0;
  double rate = 0.0;
  bool overflow = false;  // zero denominator
};

// Time self-convergence ratio |u_k - u_{k/2}|_H1 / |u_{k/2} - u_{k/4}|_H1 on
// one mesh; log2 of it estimates the temporal order.
RhoEstimate rho_estimator(const NodalField& u_k, const NodalField& u_k2,
                          const NodalField& u_k4, const SparseOperator& stiffness,
                          const SparseOperator& mass);

double h1_norm(const NodalField& v, const SparseOperator& stiffness,
               const SparseOperator& mass);

struct BarrierSample {
  Vec3 x0{};
  double energy = 0.0;
  bool skipped = false;  // path point coincided with a vertex
};

// Dirichlet energy of the interpolated defect field (x - x0)/|x - x0| for
// each path point. Points within vertex_tol of a vertex are skipped.
std::vector<BarrierSample> barrier_scan(const Mesh& mesh, const SparseOperator& stiffness,
                                        std::span<const Vec3> path,
                                        double vertex_tol = 1e-12);

// Energy of the two triangles of the grid rectangle containing x0 for the
// interpolated defect field; used for the exact trapped-defect energies.
double defect_pair_energy(const Mesh& mesh, const Vec3& x0);

// Largest single-cell energy contribution; a defect sitting inside the mesh
// keeps this at the trapped-defect scale, so its decay signals that the
// defects have left the domain.
double max_cell_energy(const NodalField& u, const Mesh& mesh);

}  // namespace spherefem
