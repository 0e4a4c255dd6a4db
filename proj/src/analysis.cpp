#include "spherefem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spherefem/kernels.hpp"
#include "spherefem/quadrature.hpp"

namespace spherefem {

double SmoothTestProblem::theta(const Vec3& x, double t) const {
  return amplitude * std::exp(-gamma * (kx * kx + ky * ky) * t) * std::cos(kx * x[0]) *
         std::cos(ky * x[1]);
}

Vec3 SmoothTestProblem::grad_theta(const Vec3& x, double t) const {
  const double e = amplitude * std::exp(-gamma * (kx * kx + ky * ky) * t);
  return {-e * kx * std::sin(kx * x[0]) * std::cos(ky * x[1]),
          -e * ky * std::cos(kx * x[0]) * std::sin(ky * x[1]), 0.0};
}

Vec3 SmoothTestProblem::u(const Vec3& x, double t) const {
  const double th = theta(x, t);
  return {std::cos(th), std::sin(th), 0.0};
}

std::array<Vec3, 2> SmoothTestProblem::grad_u(const Vec3& x, double t) const {
  const double th = theta(x, t);
  const Vec3 g = grad_theta(x, t);
  std::array<Vec3, 2> J{};
  for (int d = 0; d < 2; ++d) {
    J[0][d] = -std::sin(th) * g[d];
    J[1][d] = std::cos(th) * g[d];
  }
  return J;
}

double SmoothTestProblem::q(const Vec3& x, double t) const {
  const Vec3 g = grad_theta(x, t);
  return -(g[0] * g[0] + g[1] * g[1]);
}

PointFn SmoothTestProblem::u_fn(double t) const {
  return [*this, t](const Vec3& x, std::span<double> out) {
    const Vec3 v = u(x, t);
    out[0] = v[0];
    out[1] = v[1];
  };
}

PointFn SmoothTestProblem::q_fn(double t) const {
  return [*this, t](const Vec3& x, std::span<double> out) { out[0] = q(x, t); };
}

Vec3 SingularIC::raw(const Vec3& x) const {
  const double w = blend(x[0]);
  Vec3 v{};
  v[0] = w * (x[0] + delta) - (1.0 - w) * (x[0] - delta);
  for (int d = 1; d < dim; ++d) v[d] = w * x[d] - (1.0 - w) * x[d];
  return v;
}

Vec3 SingularIC::eval(const Vec3& x) const {
  const Vec3 v = raw(x);
  const double n = norm(v, dim);
  if (n < 1e-14) throw Error("SingularIC: field vanishes at the requested point");
  Vec3 out{};
  for (int d = 0; d < dim; ++d) out[d] = v[d] / n;
  return out;
}

PointFn SingularIC::fn() const {
  return [*this](const Vec3& x, std::span<double> out) {
    const Vec3 v = eval(x);
    for (int d = 0; d < dim; ++d) out[d] = v[d];
  };
}

namespace {

Vec3 bary_point(const Mesh& mesh, std::span<const int> vs, const double* bary) {
  Vec3 x{};
  for (std::size_t s = 0; s < vs.size(); ++s) {
    const Vec3 p = mesh.vertex(vs[s]);
    for (int d = 0; d < mesh.dim; ++d) x[d] += bary[s] * p[d];
  }
  return x;
}

struct CellErrAccum {
  double l1 = 0.0, l2 = 0.0, linf = 0.0, h1_semi = 0.0;
};

// shared quadrature loop for scalar/vector error norms
template <typename ExactFn, typename ExactGradFn>
NormSet quad_error(const NodalField& f_h, const Mesh& mesh, int quad_degree, int comps,
                   ExactFn exact, ExactGradFn exact_grad) {
  const QuadRule& rule = simplex_rule(mesh.dim, quad_degree);
  const int nc = mesh.num_cells();
  const int n = mesh.verts_per_cell();
  std::vector<CellErrAccum> acc(nc);

#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    const auto vs = mesh.cell(c);
    const double vol = mesh.cell_volumes[c];
    CellErrAccum a;

    // P1 gradient of each component on this cell (constant)
    // barycentric gradients from vertex coordinates
    Vec3 grads[4];
    {
      const Vec3 p0 = mesh.vertex(vs[0]);
      if (mesh.dim == 2) {
        const Vec3 p1 = mesh.vertex(vs[1]);
        const Vec3 p2 = mesh.vertex(vs[2]);
        const double det = 2.0 * vol;
        grads[1] = {(p2[1] - p0[1]) / det, -(p2[0] - p0[0]) / det, 0.0};
        grads[2] = {-(p1[1] - p0[1]) / det, (p1[0] - p0[0]) / det, 0.0};
      } else {
        const Vec3 p1 = mesh.vertex(vs[1]);
        const Vec3 p2 = mesh.vertex(vs[2]);
        const Vec3 p3 = mesh.vertex(vs[3]);
        Vec3 e1{}, e2{}, e3{};
        for (int d = 0; d < 3; ++d) {
          e1[d] = p1[d] - p0[d];
          e2[d] = p2[d] - p0[d];
          e3[d] = p3[d] - p0[d];
        }
        const double det = 6.0 * vol;
        const Vec3 c23 = cross(e2, e3), c31 = cross(e3, e1), c12 = cross(e1, e2);
        for (int d = 0; d < 3; ++d) {
          grads[1][d] = c23[d] / det;
          grads[2][d] = c31[d] / det;
          grads[3][d] = c12[d] / det;
        }
      }
      for (int d = 0; d < 3; ++d)
        grads[0][d] = -(grads[1][d] + grads[2][d] + (mesh.dim == 3 ? grads[3][d] : 0.0));
    }

    Vec3 gh[2]{};  // discrete gradient rows (comps <= 2 here)
    for (int comp = 0; comp < comps; ++comp)
      for (int s = 0; s < n; ++s)
        for (int d = 0; d < mesh.dim; ++d)
          gh[comp][d] += f_h.node(vs[s])[comp] * grads[s][d];

    for (int p = 0; p < rule.num_points; ++p) {
      const double* bary = rule.bary.data() + static_cast<std::size_t>(p) * n;
      const Vec3 x = bary_point(mesh, vs, bary);
      double e2 = 0.0;
      std::array<double, 2> ex{};
      exact(x, ex);
      for (int comp = 0; comp < comps; ++comp) {
        double fh = 0.0;
        for (int s = 0; s < n; ++s) fh += bary[s] * f_h.node(vs[s])[comp];
        const double diff = ex[comp] - fh;
        e2 += diff * diff;
      }
      const double w = rule.weights[p] * vol;
      a.l1 += w * std::sqrt(e2);
      a.l2 += w * e2;
      a.linf = std::max(a.linf, std::sqrt(e2));

      std::array<Vec3, 2> Jex{};
      exact_grad(x, Jex);
      double ge2 = 0.0;
      for (int comp = 0; comp < comps; ++comp)
        for (int d = 0; d < mesh.dim; ++d) {
          const double diff = Jex[comp][d] - gh[comp][d];
          ge2 += diff * diff;
        }
      a.h1_semi += w * ge2;
    }
    acc[c] = a;
  }

  std::vector<double> l1(nc), l2(nc), h1(nc);
  double linf = 0.0;
  for (int c = 0; c < nc; ++c) {
    l1[c] = acc[c].l1;
    l2[c] = acc[c].l2;
    h1[c] = acc[c].h1_semi;
    linf = std::max(linf, acc[c].linf);
  }
  NormSet out;
  out.l1 = kernels::serial::sum(l1);
  out.l2 = kernels::serial::sum(l2);
  const double h1s = kernels::serial::sum(h1);
  out.h1 = std::sqrt(out.l2 + h1s);
  out.l2 = std::sqrt(out.l2);
  out.linf = linf;
  return out;
}

}  // namespace

NormSet error_norms_u(const NodalField& u_h, const SmoothTestProblem& problem, double t,
                      int quad_degree) {
  const Mesh& mesh = *u_h.mesh;
  NormSet ns = quad_error(
      u_h, mesh, quad_degree, 2,
      [&](const Vec3& x, std::array<double, 2>& out) {
        const Vec3 v = problem.u(x, t);
        out[0] = v[0];
        out[1] = v[1];
      },
      [&](const Vec3& x, std::array<Vec3, 2>& J) { J = problem.grad_u(x, t); });
  // vertices contribute to the max norm as well
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    const Vec3 ue = problem.u(mesh.vertex(a), t);
    double e2 = 0.0;
    for (int c = 0; c < 2; ++c) {
      const double d = ue[c] - u_h.node(a)[c];
      e2 += d * d;
    }
    ns.linf = std::max(ns.linf, std::sqrt(e2));
  }
  return ns;
}

NormSet error_norms_q(const NodalField& q_h, const SmoothTestProblem& problem, double t,
                      int quad_degree) {
  const Mesh& mesh = *q_h.mesh;
  NormSet ns = quad_error(
      q_h, mesh, quad_degree, 1,
      [&](const Vec3& x, std::array<double, 2>& out) { out[0] = problem.q(x, t); },
      [&](const Vec3& x, std::array<Vec3, 2>& J) {
        // gradient of -|grad theta|^2 via second derivatives
        const double e =
            problem.amplitude *
            std::exp(-problem.gamma * (problem.kx * problem.kx + problem.ky * problem.ky) * t);
        const double kx = problem.kx, ky = problem.ky;
        const double sx = std::sin(kx * x[0]), cx = std::cos(kx * x[0]);
        const double sy = std::sin(ky * x[1]), cy = std::cos(ky * x[1]);
        const double tx = -e * kx * sx * cy;   // d theta / dx
        const double ty = -e * ky * cx * sy;   // d theta / dy
        const double txx = -e * kx * kx * cx * cy;
        const double txy = e * kx * ky * sx * sy;
        const double tyy = -e * ky * ky * cx * cy;
        J[0][0] = -2.0 * (tx * txx + ty * txy);
        J[0][1] = -2.0 * (tx * txy + ty * tyy);
      });
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    const double d = problem.q(mesh.vertex(a), t) - q_h.node(a)[0];
    ns.linf = std::max(ns.linf, std::abs(d));
  }
  return ns;
}

NegnormWorkspace::NegnormWorkspace(const Mesh& mesh, const SparseOperator& stiffness) {
  const int nv = mesh.num_vertices();
  std::vector<int> index(nv, -1);
  for (int a = 0; a < nv; ++a)
    if (!mesh.boundary_vertex[a]) {
      index[a] = static_cast<int>(interior_.size());
      interior_.push_back(a);
    }
  if (interior_.empty()) return;

  SparseOperator& Ki = interior_stiffness_;
  Ki.rows = Ki.cols = static_cast<int>(interior_.size());
  Ki.row_ptr.assign(Ki.rows + 1, 0);
  for (int r = 0; r < Ki.rows; ++r) {
    const int a = interior_[r];
    int count = 0;
    for (int col : stiffness.row_cols(a))
      if (index[col] >= 0) ++count;
    Ki.row_ptr[r + 1] = Ki.row_ptr[r] + count;
  }
  Ki.col_idx.resize(Ki.row_ptr[Ki.rows]);
  Ki.values.resize(Ki.row_ptr[Ki.rows]);
  for (int r = 0; r < Ki.rows; ++r) {
    const int a = interior_[r];
    int pos = Ki.row_ptr[r];
    const auto cols = stiffness.row_cols(a);
    const auto vals = stiffness.row_vals(a);
    for (std::size_t p = 0; p < cols.size(); ++p)
      if (index[cols[p]] >= 0) {
        Ki.col_idx[pos] = index[cols[p]];
        Ki.values[pos] = vals[p];
        ++pos;
      }
  }
  Ki.symmetric = true;
  factor_.emplace(Ki);
}

double NegnormWorkspace::apply(std::span<const double> rhs) const {
  if (interior_.empty()) throw Error("negnorm: mesh has no interior vertices");
  std::vector<double> b(interior_.size());
  for (std::size_t i = 0; i < interior_.size(); ++i) b[i] = rhs[interior_[i]];
  std::vector<double> x = factor_->solve(b);
  const double v = kernels::serial::dot(x, b);
  return std::sqrt(std::max(0.0, v));
}

double negnorm_field(const NodalField& q_h, const SparseOperator& stiffness,
                     const SparseOperator& mass) {
  NegnormWorkspace ws(*q_h.mesh, stiffness);
  if (!ws.valid()) throw Error("negnorm: mesh has no interior vertices");
  std::vector<double> mq(q_h.values.size());
  kernels::spmv(mass, q_h.values, mq);
  return ws.apply(mq);
}

double negnorm_q(const NodalField& q_h, const SmoothTestProblem& problem, double t,
                 const SparseOperator& stiffness, const SparseOperator& mass,
                 int quad_degree) {
  const Mesh& mesh = *q_h.mesh;
  NegnormWorkspace ws(mesh, stiffness);
  if (!ws.valid()) throw Error("negnorm_q: mesh has no interior vertices");

  // functional (q - q_h, f): closed-form part by quadrature, discrete part
  // exactly through the mass matrix
  const QuadRule& rule = simplex_rule(mesh.dim, quad_degree);
  const int nc = mesh.num_cells();
  const int n = mesh.verts_per_cell();
  std::vector<double> cell_rhs(static_cast<std::size_t>(nc) * n);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    const auto vs = mesh.cell(c);
    const double vol = mesh.cell_volumes[c];
    double* out = cell_rhs.data() + static_cast<std::size_t>(c) * n;
    std::fill(out, out + n, 0.0);
    for (int p = 0; p < rule.num_points; ++p) {
      const double* bary = rule.bary.data() + static_cast<std::size_t>(p) * n;
      const Vec3 x = bary_point(mesh, vs, bary);
      const double qv = problem.q(x, t);
      const double w = rule.weights[p] * vol * qv;
      for (int s = 0; s < n; ++s) out[s] += w * bary[s];
    }
  }
  std::vector<double> rhs(mesh.num_vertices(), 0.0);
  for (int c = 0; c < nc; ++c) {
    const auto vs = mesh.cell(c);
    const double* in = cell_rhs.data() + static_cast<std::size_t>(c) * n;
    for (int s = 0; s < n; ++s) rhs[vs[s]] += in[s];
  }
  std::vector<double> mq(q_h.values.size());
  kernels::spmv(mass, q_h.values, mq);
  for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] -= mq[i];
  return ws.apply(rhs);
}

std::vector<std::optional<double>> convergence_rates(std::span<const double> errors) {
  std::vector<std::optional<double>> rates;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    if (errors[i] > 0.0 && errors[i - 1] > 0.0)
      rates.push_back(std::log2(errors[i - 1] / errors[i]));
    else
      rates.push_back(std::nullopt);
  }
  return rates;
}

double h1_norm(const NodalField& v, const SparseOperator& stiffness,
               const SparseOperator& mass) {
  const int nv = stiffness.rows;
  const int m = v.components;
  std::vector<double> xc(nv), yc(nv);
  double total = 0.0;
  for (int c = 0; c < m; ++c) {
    for (int a = 0; a < nv; ++a) xc[a] = v.node(a)[c];
    kernels::spmv(stiffness, xc, yc);
    total += kernels::dot(xc, yc);
    kernels::spmv(mass, xc, yc);
    total += kernels::dot(xc, yc);
  }
  return std::sqrt(std::max(0.0, total));
}

RhoEstimate rho_estimator(const NodalField& u_k, const NodalField& u_k2,
                          const NodalField& u_k4, const SparseOperator& stiffness,
                          const SparseOperator& mass) {
  if (u_k.values.size() != u_k2.values.size() || u_k2.values.size() != u_k4.values.size())
    throw Error("rho_estimator: fields must share one mesh");
  NodalField d1(*u_k.mesh, u_k.components), d2(*u_k.mesh, u_k.components);
  kernels::scale_add(1.0, u_k.values, -1.0, u_k2.values, d1.values);
  kernels::scale_add(1.0, u_k2.values, -1.0, u_k4.values, d2.values);
  const double n1 = h1_norm(d1, stiffness, mass);
  const double n2 = h1_norm(d2, stiffness, mass);
  RhoEstimate est;
  if (n2 == 0.0) {
    est.overflow = true;
    est.rho = std::numeric_limits<double>::infinity();
    est.rate = std::numeric_limits<double>::infinity();
    return est;
  }
  est.rho = n1 / n2;
  est.rate = std::log2(est.rho);
  return est;
}

std::vector<BarrierSample> barrier_scan(const Mesh& mesh, const SparseOperator& stiffness,
                                        std::span<const Vec3> path, double vertex_tol) {
  const int np = static_cast<int>(path.size());
  std::vector<BarrierSample> out(np);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < np; ++i) {
    BarrierSample s;
    s.x0 = path[i];
    // skip points sitting on a vertex: the defect field is undefined there
    bool on_vertex = false;
    for (int a = 0; a < mesh.num_vertices() && !on_vertex; ++a) {
      double d2 = 0.0;
      const Vec3 p = mesh.vertex(a);
      for (int d = 0; d < mesh.dim; ++d) d2 += (p[d] - s.x0[d]) * (p[d] - s.x0[d]);
      on_vertex = d2 <= vertex_tol * vertex_tol;
    }
    if (on_vertex) {
      s.skipped = true;
      s.energy = std::numeric_limits<double>::quiet_NaN();
    } else {
      NodalField u(mesh, mesh.dim);
      for (int a = 0; a < mesh.num_vertices(); ++a) {
        const Vec3 p = mesh.vertex(a);
        Vec3 v{};
        double n2 = 0.0;
        for (int d = 0; d < mesh.dim; ++d) {
          v[d] = p[d] - s.x0[d];
          n2 += v[d] * v[d];
        }
        const double n = std::sqrt(n2);
        for (int d = 0; d < mesh.dim; ++d) u.node(a)[d] = v[d] / n;
      }
      s.energy = dirichlet_energy(u, stiffness);
    }
    out[i] = s;
  }
  return out;
}

double defect_pair_energy(const Mesh& mesh, const Vec3& x0) {
  if (mesh.dim != 2) throw Error("defect_pair_energy: 2D meshes only");
  const auto ij = mesh.locate_box_cell(x0);
  const auto cells = mesh.box_cell_simplices(ij);
  NodalField u(mesh, 2);
  // only the vertices of the two cells matter; fill them all for simplicity
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    const Vec3 p = mesh.vertex(a);
    const double vx = p[0] - x0[0], vy = p[1] - x0[1];
    const double n = std::hypot(vx, vy);
    if (n < 1e-14) throw Error("defect_pair_energy: defect sits on a vertex");
    u.node(a)[0] = vx / n;
    u.node(a)[1] = vy / n;
  }
  return dirichlet_energy_cells(u, mesh, cells);
}

double max_cell_energy(const NodalField& u, const Mesh& mesh) {
  const int nc = mesh.num_cells();
  double best = 0.0;
#pragma omp parallel for schedule(static) reduction(max : best)
  for (int c = 0; c < nc; ++c) {
    const int ids[1] = {c};
    const double e = dirichlet_energy_cells(u, mesh, ids);
    best = std::max(best, e);
  }
  return best;
}

}  // namespace spherefem
