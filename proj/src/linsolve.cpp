#include "spherefem/linsolve.hpp"

#include <algorithm>
#include <optional>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "spherefem/kernels.hpp"

namespace spherefem {

namespace {

using EigenSparse = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

EigenSparse to_eigen(const SparseOperator& A) {
  std::vector<Triplet> trips;
  trips.reserve(A.values.size());
  for (int r = 0; r < A.rows; ++r)
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
      trips.emplace_back(r, A.col_idx[p], A.values[p]);
  EigenSparse M(A.rows, A.cols);
  M.setFromTriplets(trips.begin(), trips.end());
  M.makeCompressed();
  return M;
}

double rel_residual(const SparseOperator& A, std::span<const double> x,
                    std::span<const double> b) {
  std::vector<double> r(b.size());
  kernels::spmv(A, x, r);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
  const double nb = std::sqrt(kernels::dot(b, b));
  const double nr = std::sqrt(kernels::dot(r, r));
  return nr / (nb > 0.0 ? nb : 1.0);
}

std::vector<double> solve_spd_cg(const SparseOperator& A, std::span<const double> b,
                                 const SpdOptions& opts) {
  const std::size_t n = b.size();
  std::vector<double> x(n, 0.0), r(b.begin(), b.end()), z(n), p(n), Ap(n), diag(n);
  for (int i = 0; i < A.rows; ++i) {
    const double d = A.coeff(i, i);
    diag[i] = d > 0.0 ? 1.0 / d : 1.0;
  }
  const double nb = std::sqrt(kernels::dot(b, b));
  if (nb == 0.0) return x;
  for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] * r[i];
  p = z;
  double rz = kernels::dot(r, z);
  for (int it = 0; it < opts.maxiter; ++it) {
    kernels::spmv(A, p, Ap);
    const double pAp = kernels::dot(p, Ap);
    if (!(pAp > 0.0)) throw Error("solve_spd: cg breakdown (operator not positive definite)");
    const double alpha = rz / pAp;
    kernels::axpy(alpha, p, x);
    kernels::axpy(-alpha, Ap, r);
    if (std::sqrt(kernels::dot(r, r)) <= opts.tol * nb) return x;
    for (std::size_t i = 0; i < n; ++i) z[i] = diag[i] * r[i];
    const double rz_new = kernels::dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    kernels::scale_add(1.0, z, beta, p, p);
  }
  throw Error("solve_spd: cg did not converge within " + std::to_string(opts.maxiter) +
              " iterations");
}

}  // namespace

struct SpdFactor::Impl {
  Eigen::SimplicialLDLT<EigenSparse> ldlt;
};

SpdFactor::SpdFactor(const SparseOperator& A) : impl_(std::make_unique<Impl>()) {
  impl_->ldlt.compute(to_eigen(A));
  if (impl_->ldlt.info() != Eigen::Success)
    throw Error("SpdFactor: factorization failed (operator not positive definite?)");
}

SpdFactor::~SpdFactor() = default;
SpdFactor::SpdFactor(SpdFactor&&) noexcept = default;
SpdFactor& SpdFactor::operator=(SpdFactor&&) noexcept = default;

void SpdFactor::solve(std::span<const double> b, std::span<double> x) const {
  Eigen::Map<const Eigen::VectorXd> bm(b.data(), static_cast<Eigen::Index>(b.size()));
  Eigen::Map<Eigen::VectorXd> xm(x.data(), static_cast<Eigen::Index>(x.size()));
  xm = impl_->ldlt.solve(bm);
}

std::vector<double> SpdFactor::solve(std::span<const double> b) const {
  std::vector<double> x(b.size());
  solve(b, x);
  return x;
}

std::vector<double> solve_spd(const SparseOperator& A, std::span<const double> b,
                              const SpdOptions& opts) {
  if (A.rows != A.cols || static_cast<std::size_t>(A.rows) != b.size())
    throw Error("solve_spd: shape mismatch");
  std::vector<double> x;
  if (opts.method == SpdMethod::direct) {
    SpdFactor f(A);
    x = f.solve(b);
  } else {
    x = solve_spd_cg(A, b, opts);
  }
  const double res = rel_residual(A, x, b);
  if (!(res <= std::max(opts.tol * 100.0, 1e-9)))
    throw Error("solve_spd: residual " + std::to_string(res) + " above tolerance");
  return x;
}

void SaddleSystem::validate() const {
  const std::size_t nu = static_cast<std::size_t>(num_nodes) * components;
  if (!stiffness || stiffness->rows != num_nodes)
    throw Error("SaddleSystem: stiffness missing or mis-sized");
  if (node_scale.size() != static_cast<std::size_t>(num_nodes))
    throw Error("SaddleSystem: node_scale mis-sized");
  if (rhs_u.size() != nu) throw Error("SaddleSystem: rhs_u mis-sized");
  if (!coupling.empty()) {
    if (!mass || mass->rows != num_nodes) throw Error("SaddleSystem: mass missing");
    if (coupling.size() != nu || constraint_dir.size() != nu ||
        rhs_q.size() != static_cast<std::size_t>(num_nodes))
      throw Error("SaddleSystem: constraint data mis-sized");
  }
  if (alpha != 0.0 && (components != 3 || skew_axis.size() != nu))
    throw Error("SaddleSystem: alpha > 0 needs 3 components and a skew axis field");
}

namespace {

// relative KKT residual of the nodal-form system
double saddle_residual(const SaddleSystem& sys, std::span<const double> u,
                       std::span<const double> q) {
  const int nv = sys.num_nodes;
  const int m = sys.components;
  const int nq = sys.num_constraints();
  std::vector<double> res_u(static_cast<std::size_t>(nv) * m, 0.0);
  // stiffness part, per component
  std::vector<double> xc(nv), yc(nv);
  for (int c = 0; c < m; ++c) {
    for (int a = 0; a < nv; ++a) xc[a] = u[static_cast<std::size_t>(a) * m + c];
    kernels::spmv(*sys.stiffness, xc, yc);
    for (int a = 0; a < nv; ++a) res_u[static_cast<std::size_t>(a) * m + c] =
        sys.stiff_scale * yc[a];
  }
  // node blocks
  for (int a = 0; a < nv; ++a) {
    const double s = sys.node_scale[a];
    const double* ua = u.data() + static_cast<std::size_t>(a) * m;
    double* ra = res_u.data() + static_cast<std::size_t>(a) * m;
    for (int c = 0; c < m; ++c) ra[c] += s * ua[c];
    if (sys.alpha != 0.0) {
      const double* w = sys.skew_axis.data() + static_cast<std::size_t>(a) * m;
      // alpha * s * (w x u)
      ra[0] += sys.alpha * s * (w[1] * ua[2] - w[2] * ua[1]);
      ra[1] += sys.alpha * s * (w[2] * ua[0] - w[0] * ua[2]);
      ra[2] += sys.alpha * s * (w[0] * ua[1] - w[1] * ua[0]);
    }
  }
  if (nq > 0) {
    std::vector<double> Mq(nv);
    kernels::spmv(*sys.mass, q, Mq);
    for (int a = 0; a < nv; ++a) {
      const double* c = sys.coupling.data() + static_cast<std::size_t>(a) * m;
      double* ra = res_u.data() + static_cast<std::size_t>(a) * m;
      for (int i = 0; i < m; ++i) ra[i] += c[i] * Mq[a];
    }
  }
  for (std::size_t i = 0; i < res_u.size(); ++i) res_u[i] -= sys.rhs_u[i];

  double num = kernels::dot(res_u, res_u);
  double den = kernels::dot(sys.rhs_u, sys.rhs_u);
  if (nq > 0) {
    std::vector<double> res_q(nv);
    for (int a = 0; a < nv; ++a) {
      const double* g = sys.constraint_dir.data() + static_cast<std::size_t>(a) * m;
      const double* ua = u.data() + static_cast<std::size_t>(a) * m;
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += g[i] * ua[i];
      res_q[a] = s - sys.rhs_q[a];
    }
    num += kernels::dot(res_q, res_q);
    den += kernels::dot(sys.rhs_q, sys.rhs_q);
  }
  return std::sqrt(num) / std::sqrt(den > 0.0 ? den : 1.0);
}

SaddleSolution solve_saddle_direct(const SaddleSystem& sys, const SaddleOptions& opts) {
  const int nv = sys.num_nodes;
  const int m = sys.components;
  const int nq = sys.num_constraints();
  const int nu = nv * m;
  const int ntot = nu + nq;

  if (nq > 0) {
    for (int a = 0; a < nv; ++a) {
      double g2 = 0.0;
      for (int i = 0; i < m; ++i) {
        const double gi = sys.constraint_dir[static_cast<std::size_t>(a) * m + i];
        g2 += gi * gi;
      }
      if (!(g2 > 0.0))
        throw Error("solve_saddle: constraint direction vanishes at node " +
                    std::to_string(a));
    }
  }

  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(sys.stiffness->nnz()) * m + nu * (m + 2) +
                (nq > 0 ? sys.mass->nnz() * m : 0));
  // A block
  for (int r = 0; r < nv; ++r)
    for (int p = sys.stiffness->row_ptr[r]; p < sys.stiffness->row_ptr[r + 1]; ++p)
      for (int c = 0; c < m; ++c)
        trips.emplace_back(r * m + c, sys.stiffness->col_idx[p] * m + c,
                           sys.stiff_scale * sys.stiffness->values[p]);
  for (int a = 0; a < nv; ++a) {
    const double s = sys.node_scale[a];
    for (int c = 0; c < m; ++c) trips.emplace_back(a * m + c, a * m + c, s);
    if (sys.alpha != 0.0) {
      const double* w = sys.skew_axis.data() + static_cast<std::size_t>(a) * m;
      const double as = sys.alpha * s;
      trips.emplace_back(a * m + 0, a * m + 1, -as * w[2]);
      trips.emplace_back(a * m + 0, a * m + 2, as * w[1]);
      trips.emplace_back(a * m + 1, a * m + 0, as * w[2]);
      trips.emplace_back(a * m + 1, a * m + 2, -as * w[0]);
      trips.emplace_back(a * m + 2, a * m + 0, -as * w[1]);
      trips.emplace_back(a * m + 2, a * m + 1, as * w[0]);
    }
  }
  std::vector<double> rhs(ntot);
  for (int i = 0; i < nu; ++i) rhs[i] = sys.rhs_u[i];

  if (nq > 0) {
    // multiplier column: diag(coupling^i) * mass
    for (int r = 0; r < nv; ++r) {
      const double* c = sys.coupling.data() + static_cast<std::size_t>(r) * m;
      for (int p = sys.mass->row_ptr[r]; p < sys.mass->row_ptr[r + 1]; ++p)
        for (int i = 0; i < m; ++i)
          trips.emplace_back(r * m + i, nu + sys.mass->col_idx[p],
                             c[i] * sys.mass->values[p]);
    }
    if (!sys.mass_weighted_rows) {
      for (int a = 0; a < nv; ++a) {
        const double* g = sys.constraint_dir.data() + static_cast<std::size_t>(a) * m;
        for (int i = 0; i < m; ++i) trips.emplace_back(nu + a, a * m + i, g[i]);
        rhs[nu + a] = sys.rhs_q[a];
      }
    } else {
      // rows tested against the mass matrix: row a = sum_b M_ab g_b . u_b
      for (int r = 0; r < nv; ++r) {
        for (int p = sys.mass->row_ptr[r]; p < sys.mass->row_ptr[r + 1]; ++p) {
          const int b = sys.mass->col_idx[p];
          const double* g = sys.constraint_dir.data() + static_cast<std::size_t>(b) * m;
          for (int i = 0; i < m; ++i)
            trips.emplace_back(nu + r, b * m + i, sys.mass->values[p] * g[i]);
        }
      }
      std::vector<double> mr(nv);
      kernels::spmv(*sys.mass, sys.rhs_q, mr);
      for (int a = 0; a < nv; ++a) rhs[nu + a] = mr[a];
    }
  }

  EigenSparse kkt(ntot, ntot);
  kkt.setFromTriplets(trips.begin(), trips.end());
  kkt.makeCompressed();
  Eigen::SparseLU<EigenSparse> lu;
  lu.analyzePattern(kkt);
  lu.factorize(kkt);
  if (lu.info() != Eigen::Success)
    throw Error("solve_saddle: LU factorization of the block system failed");
  Eigen::Map<const Eigen::VectorXd> bm(rhs.data(), ntot);
  Eigen::VectorXd xs = lu.solve(bm);

  SaddleSolution sol;
  sol.u.assign(xs.data(), xs.data() + nu);
  sol.q.assign(xs.data() + nu, xs.data() + ntot);
  sol.kkt_residual = saddle_residual(sys, sol.u, sol.q);
  if (!(sol.kkt_residual <= std::max(opts.tol * 100.0, 1e-9)))
    throw Error("solve_saddle: KKT residual " + std::to_string(sol.kkt_residual) +
                " above tolerance");
  return sol;
}

}  // namespace

// Uzawa path state: one factorization of the scalar A-block shared by all
// components, reused while the scales stay the same.
struct SaddleSolver::Cache {
  const SparseOperator* stiffness = nullptr;
  std::vector<double> node_scale;
  double stiff_scale = 0.0;
  std::optional<SpdFactor> factor;
  std::vector<double> h_diag;
  std::vector<double> q_warm;

  bool matches(const SaddleSystem& sys) const {
    return factor.has_value() && stiffness == sys.stiffness &&
           stiff_scale == sys.stiff_scale &&
           node_scale.size() == sys.node_scale.size() &&
           std::equal(node_scale.begin(), node_scale.end(), sys.node_scale.begin());
  }

  void rebuild(const SaddleSystem& sys) {
    stiffness = sys.stiffness;
    stiff_scale = sys.stiff_scale;
    node_scale.assign(sys.node_scale.begin(), sys.node_scale.end());
    SparseOperator H = *sys.stiffness;
    for (auto& v : H.values) v *= sys.stiff_scale;
    h_diag.assign(H.rows, 0.0);
    for (int r = 0; r < H.rows; ++r) {
      const auto cols = H.row_cols(r);
      for (std::size_t p = 0; p < cols.size(); ++p)
        if (cols[p] == r) H.values[H.row_ptr[r] + static_cast<int>(p)] += node_scale[r];
      h_diag[r] = H.coeff(r, r);
    }
    factor.emplace(H);
  }
};

SaddleSolver::SaddleSolver(const SaddleOptions& opts)
    : opts_(opts), cache_(std::make_unique<Cache>()) {}
SaddleSolver::~SaddleSolver() = default;

void SaddleSolver::set_initial_multiplier(std::span<const double> q0) {
  cache_->q_warm.assign(q0.begin(), q0.end());
}

namespace {

// Schur-complement conjugate gradients for the symmetric case (alpha = 0,
// constraint rows parallel to the multiplier coupling). The constraint rows
// are rescaled to the coupling directions and tested against the mass
// matrix, which makes the dual operator
//   S = sum_i (M diag(c^i)) H^{-1} (diag(c^i) M)
// symmetric positive definite. Inner solves reuse one factorization of H.
SaddleSolution solve_saddle_uzawa(const SaddleSystem& sys, const SaddleOptions& opts,
                                  SaddleSolver::Cache& cache) {
  if (sys.alpha != 0.0)
    throw Error("solve_saddle: the Uzawa path requires alpha = 0");
  const int nv = sys.num_nodes;
  const int m = sys.components;
  const int nq = sys.num_constraints();
  if (!cache.matches(sys)) cache.rebuild(sys);
  const SpdFactor& H = *cache.factor;

  std::vector<double> comp_in(nv), comp_out(nv);
  auto apply_Hinv_blocks = [&](std::span<const double> in, std::span<double> out) {
    // component-wise solves with the shared scalar factorization
    for (int c = 0; c < m; ++c) {
      for (int a = 0; a < nv; ++a) comp_in[a] = in[static_cast<std::size_t>(a) * m + c];
      H.solve(comp_in, comp_out);
      for (int a = 0; a < nv; ++a) out[static_cast<std::size_t>(a) * m + c] = comp_out[a];
    }
  };

  SaddleSolution sol;
  sol.u.assign(static_cast<std::size_t>(nv) * m, 0.0);
  if (nq == 0) {
    apply_Hinv_blocks(sys.rhs_u, sol.u);
    sol.kkt_residual = saddle_residual(sys, sol.u, sol.q);
    return sol;
  }

  // Rescale constraint rows onto the coupling directions: g_a = beta_a c_a.
  std::vector<double> rq(nv);
  for (int a = 0; a < nv; ++a) {
    const double* g = sys.constraint_dir.data() + static_cast<std::size_t>(a) * m;
    const double* c = sys.coupling.data() + static_cast<std::size_t>(a) * m;
    double gc = 0.0, cc = 0.0, gg = 0.0;
    for (int i = 0; i < m; ++i) {
      gc += g[i] * c[i];
      cc += c[i] * c[i];
      gg += g[i] * g[i];
    }
    if (!(cc > 0.0) || !(gg > 0.0))
      throw Error("solve_saddle: constraint direction vanishes at node " + std::to_string(a));
    const double beta = gc / cc;
    double off2 = 0.0;
    for (int i = 0; i < m; ++i) {
      const double d = g[i] - beta * c[i];
      off2 += d * d;
    }
    if (std::abs(beta) * std::sqrt(cc) < 1e-14 * std::sqrt(gg) || off2 > 1e-24 * gg)
      throw Error(
          "solve_saddle: Uzawa path needs constraint rows parallel to the coupling "
          "(node " + std::to_string(a) + ")");
    rq[a] = sys.rhs_q[a] / beta;
  }

  const auto& M = *sys.mass;
  std::vector<double> scratch_u(static_cast<std::size_t>(nv) * m);
  std::vector<double> scratch_u2(static_cast<std::size_t>(nv) * m);
  std::vector<double> Mq(nv), t1(nv);

  auto apply_Bt = [&](std::span<const double> q, std::span<double> out) {
    kernels::spmv(M, q, Mq);
    for (int a = 0; a < nv; ++a) {
      const double* c = sys.coupling.data() + static_cast<std::size_t>(a) * m;
      for (int i = 0; i < m; ++i) out[static_cast<std::size_t>(a) * m + i] = c[i] * Mq[a];
    }
  };
  auto apply_B = [&](std::span<const double> u, std::span<double> out) {
    for (int a = 0; a < nv; ++a) {
      const double* c = sys.coupling.data() + static_cast<std::size_t>(a) * m;
      const double* ua = u.data() + static_cast<std::size_t>(a) * m;
      double s = 0.0;
      for (int i = 0; i < m; ++i) s += c[i] * ua[i];
      t1[a] = s;
    }
    kernels::spmv(M, t1, out);
  };
  auto apply_S = [&](std::span<const double> q, std::span<double> out) {
    apply_Bt(q, scratch_u);
    apply_Hinv_blocks(scratch_u, scratch_u2);
    apply_B(scratch_u2, out);
  };

  // rhs of the dual system: B H^{-1} f - M r
  std::vector<double> y0(static_cast<std::size_t>(nv) * m);
  apply_Hinv_blocks(sys.rhs_u, y0);
  std::vector<double> b(nv);
  apply_B(y0, b);
  kernels::spmv(M, rq, t1);
  for (int a = 0; a < nv; ++a) b[a] -= t1[a];

  // Jacobi-type preconditioner from lumped estimates of S's diagonal.
  std::vector<double> prec(nv);
  {
    std::vector<double> mrow(nv, 0.0);
    for (int r = 0; r < nv; ++r) {
      double s = 0.0;
      for (double v : M.row_vals(r)) s += v;
      mrow[r] = s;
    }
    for (int a = 0; a < nv; ++a) {
      const double* c = sys.coupling.data() + static_cast<std::size_t>(a) * m;
      double cc = 0.0;
      for (int i = 0; i < m; ++i) cc += c[i] * c[i];
      const double est = mrow[a] * mrow[a] * cc / cache.h_diag[a];
      prec[a] = est > 0.0 ? 1.0 / est : 1.0;
    }
  }

  std::vector<double> q(nv, 0.0);
  if (cache.q_warm.size() == static_cast<std::size_t>(nv)) q = cache.q_warm;
  std::vector<double> r(nv), z(nv), p(nv), Sp(nv);
  apply_S(q, r);
  for (int a = 0; a < nv; ++a) r[a] = b[a] - r[a];
  const double nb = std::sqrt(kernels::dot(b, b));
  const double stop = opts.tol * 0.05 * (nb > 0.0 ? nb : 1.0);
  for (int a = 0; a < nv; ++a) z[a] = prec[a] * r[a];
  p = z;
  double rz = kernels::dot(r, z);
  int it = 0;
  while (std::sqrt(kernels::dot(r, r)) > stop) {
    if (++it > opts.uzawa_maxiter)
      throw Error("solve_saddle: Uzawa iteration did not converge within " +
                  std::to_string(opts.uzawa_maxiter) + " iterations");
    apply_S(p, Sp);
    const double pSp = kernels::dot(p, Sp);
    if (!(pSp > 0.0)) throw Error("solve_saddle: Uzawa breakdown (dual operator singular)");
    const double alpha = rz / pSp;
    kernels::axpy(alpha, p, q);
    kernels::axpy(-alpha, Sp, r);
    for (int a = 0; a < nv; ++a) z[a] = prec[a] * r[a];
    const double rz_new = kernels::dot(r, z);
    kernels::scale_add(1.0, z, rz_new / rz, p, p);
    rz = rz_new;
  }

  apply_Bt(q, scratch_u);
  for (std::size_t i = 0; i < scratch_u.size(); ++i)
    scratch_u[i] = sys.rhs_u[i] - scratch_u[i];
  apply_Hinv_blocks(scratch_u, sol.u);
  sol.q = q;
  sol.uzawa_iters = it;
  cache.q_warm = q;
  sol.kkt_residual = saddle_residual(sys, sol.u, sol.q);
  if (!(sol.kkt_residual <= std::max(opts.tol * 100.0, 1e-9)))
    throw Error("solve_saddle: KKT residual " + std::to_string(sol.kkt_residual) +
                " above tolerance (Uzawa)");
  return sol;
}

}  // namespace

SaddleSolution SaddleSolver::solve(const SaddleSystem& sys) {
  sys.validate();
  if (opts_.method == SaddleMethod::direct) return solve_saddle_direct(sys, opts_);
  return solve_saddle_uzawa(sys, opts_, *cache_);
}

SaddleSolution solve_saddle(const SaddleSystem& sys, const SaddleOptions& opts) {
  SaddleSolver solver(opts);
  return solver.solve(sys);
}

}  // namespace spherefem
