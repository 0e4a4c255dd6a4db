#include "spherefem/assembly.hpp"

#include <algorithm>
#include <cmath>

#include "spherefem/kernels.hpp"
#include "spherefem/linsolve.hpp"
#include "spherefem/quadrature.hpp"

namespace spherefem {

namespace {

// Barycentric gradients and volume of one simplex.
struct CellGeometry {
  Vec3 grad[4];  // gradient of each barycentric coordinate
  double volume = 0.0;
};

CellGeometry cell_geometry(const Mesh& mesh, int c) {
  CellGeometry g;
  const auto vs = mesh.cell(c);
  const Vec3 p0 = mesh.vertex(vs[0]);
  g.volume = mesh.cell_volumes[c];
  if (mesh.dim == 2) {
    const Vec3 p1 = mesh.vertex(vs[1]);
    const Vec3 p2 = mesh.vertex(vs[2]);
    const double det = 2.0 * g.volume;
    // rows of the inverse Jacobian
    g.grad[1] = {(p2[1] - p0[1]) / det, -(p2[0] - p0[0]) / det, 0.0};
    g.grad[2] = {-(p1[1] - p0[1]) / det, (p1[0] - p0[0]) / det, 0.0};
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
    const double det = 6.0 * g.volume;
    const Vec3 c23 = cross(e2, e3);
    const Vec3 c31 = cross(e3, e1);
    const Vec3 c12 = cross(e1, e2);
    for (int d = 0; d < 3; ++d) {
      g.grad[1][d] = c23[d] / det;
      g.grad[2][d] = c31[d] / det;
      g.grad[3][d] = c12[d] / det;
    }
  }
  for (int d = 0; d < 3; ++d)
    g.grad[0][d] = -(g.grad[1][d] + g.grad[2][d] + (mesh.dim == 3 ? g.grad[3][d] : 0.0));
  return g;
}

using LocalMatrix = std::array<double, 16>;  // (dim+1)^2 packed row-major

void local_stiffness(const Mesh& mesh, int c, LocalMatrix& K) {
  const CellGeometry g = cell_geometry(mesh, c);
  const int n = mesh.verts_per_cell();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      K[i * n + j] = g.volume * dot(g.grad[i], g.grad[j], mesh.dim);
}

void local_mass(const Mesh& mesh, int c, LocalMatrix& M) {
  const int n = mesh.verts_per_cell();
  const double v = mesh.cell_volumes[c];
  const double off = v / ((n) * (n + 1));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M[i * n + j] = (i == j ? 2.0 * off : off);
}

template <typename LocalFn>
SparseOperator assemble_two_phase(const Mesh& mesh, LocalFn local, bool parallel) {
  SparseOperator A = make_p1_pattern(mesh);
  const int nc = mesh.num_cells();
  const int n = mesh.verts_per_cell();

  if (parallel) {
    std::vector<LocalMatrix> locals(nc);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < nc; ++c) local(mesh, c, locals[c]);
    for (int c = 0; c < nc; ++c) {
      const auto vs = mesh.cell(c);
      for (int i = 0; i < n; ++i) {
        const auto cols = A.row_cols(vs[i]);
        double* vals = A.values.data() + A.row_ptr[vs[i]];
        for (int j = 0; j < n; ++j) {
          const auto it = std::lower_bound(cols.begin(), cols.end(), vs[j]);
          vals[it - cols.begin()] += locals[c][i * n + j];
        }
      }
    }
  } else {
    LocalMatrix loc;
    for (int c = 0; c < nc; ++c) {
      local(mesh, c, loc);
      const auto vs = mesh.cell(c);
      for (int i = 0; i < n; ++i) {
        const auto cols = A.row_cols(vs[i]);
        double* vals = A.values.data() + A.row_ptr[vs[i]];
        for (int j = 0; j < n; ++j) {
          const auto it = std::lower_bound(cols.begin(), cols.end(), vs[j]);
          vals[it - cols.begin()] += loc[i * n + j];
        }
      }
    }
  }
  A.symmetric = true;
  return A;
}

Vec3 quad_point(const Mesh& mesh, std::span<const int> vs, const double* bary) {
  Vec3 x{};
  for (std::size_t s = 0; s < vs.size(); ++s) {
    const Vec3 p = mesh.vertex(vs[s]);
    for (int d = 0; d < mesh.dim; ++d) x[d] += bary[s] * p[d];
  }
  return x;
}

}  // namespace

SparseOperator assemble_stiffness(const Mesh& mesh) {
  return assemble_two_phase(mesh, local_stiffness, true);
}
SparseOperator assemble_stiffness_serial(const Mesh& mesh) {
  return assemble_two_phase(mesh, local_stiffness, false);
}
SparseOperator assemble_mass(const Mesh& mesh) {
  return assemble_two_phase(mesh, local_mass, true);
}
SparseOperator assemble_mass_serial(const Mesh& mesh) {
  return assemble_two_phase(mesh, local_mass, false);
}

LumpedMass assemble_lumped_mass(const Mesh& mesh) {
  LumpedMass lm;
  lm.weights.assign(mesh.num_vertices(), 0.0);
  const double inv = 1.0 / mesh.verts_per_cell();
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const double share = mesh.cell_volumes[c] * inv;
    for (int a : mesh.cell(c)) lm.weights[a] += share;
  }
  lm.total = kernels::serial::sum(lm.weights);
  return lm;
}

double inner_h(const NodalField& u, const NodalField& v, const LumpedMass& lm) {
  if (u.components != v.components || u.values.size() != v.values.size())
    throw Error("inner_h: mismatched fields");
  if (u.num_nodes() != lm.size()) throw Error("inner_h: field does not match lumped mass");
  const int nv = lm.size();
  const int m = u.components;
  std::vector<double> nodal(nv);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < nv; ++a) {
    double s = 0.0;
    const double* ua = u.node(a);
    const double* va = v.node(a);
    for (int c = 0; c < m; ++c) s += ua[c] * va[c];
    nodal[a] = lm.weights[a] * s;
  }
  return kernels::sum(nodal);
}

double norm_h(const NodalField& u, const LumpedMass& lm) {
  return std::sqrt(inner_h(u, u, lm));
}

NodalField nodal_interpolate(const PointFn& f, const Mesh& mesh, int components) {
  NodalField out(mesh, components);
  const int nv = mesh.num_vertices();
  for (int a = 0; a < nv; ++a) {
    f(mesh.vertex(a), {out.node(a), static_cast<std::size_t>(components)});
    for (int c = 0; c < components; ++c)
      if (!std::isfinite(out.node(a)[c]))
        throw Error("nodal_interpolate: function not finite at vertex " + std::to_string(a));
  }
  return out;
}

NodalField l2_project(const PointFn& f, const Mesh& mesh, const SparseOperator& mass,
                      int quad_degree) {
  const QuadRule& rule = simplex_rule(mesh.dim, quad_degree);
  const int nv = mesh.num_vertices();
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
      const Vec3 x = quad_point(mesh, vs, bary);
      double val = 0.0;
      f(x, {&val, 1});
      const double wv = rule.weights[p] * vol * val;
      for (int s = 0; s < n; ++s) out[s] += wv * bary[s];
    }
  }
  std::vector<double> rhs(nv, 0.0);
  for (int c = 0; c < nc; ++c) {
    const auto vs = mesh.cell(c);
    const double* in = cell_rhs.data() + static_cast<std::size_t>(c) * n;
    for (int s = 0; s < n; ++s) rhs[vs[s]] += in[s];
  }
  NodalField out(mesh, 1);
  out.values = solve_spd(mass, rhs);
  return out;
}

NodalField l2_project(const NodalField& f, const Mesh& mesh, const SparseOperator& mass) {
  if (f.components != 1) throw Error("l2_project: scalar fields only");
  // P1 data projects to itself; still solve to keep one code path.
  std::vector<double> rhs(f.values.size());
  kernels::spmv(mass, f.values, rhs);
  NodalField out(mesh, 1);
  out.values = solve_spd(mass, rhs);
  return out;
}

NodalField normalize_nodal(const NodalField& u, double eps) {
  NodalField out(*u.mesh, u.components);
  const int nv = u.num_nodes();
  for (int a = 0; a < nv; ++a) {
    const double n = u.node_norm(a);
    if (n < eps)
      throw Error("normalize_nodal: nodal vector shorter than " + std::to_string(eps) +
                  " at vertex " + std::to_string(a));
    const double* src = u.node(a);
    double* dst = out.node(a);
    for (int c = 0; c < u.components; ++c) dst[c] = src[c] / n;
  }
  return out;
}

double dirichlet_energy(const NodalField& u, const SparseOperator& stiffness) {
  const int nv = stiffness.rows;
  if (u.num_nodes() != nv) throw Error("dirichlet_energy: size mismatch");
  const int m = u.components;
  std::vector<double> per_row(nv);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < nv; ++a) {
    const auto cols = stiffness.row_cols(a);
    const auto vals = stiffness.row_vals(a);
    const double* ua = u.node(a);
    double s = 0.0;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double* ub = u.node(cols[p]);
      double duv = 0.0;
      for (int c = 0; c < m; ++c) duv += ua[c] * ub[c];
      s += vals[p] * duv;
    }
    per_row[a] = s;
  }
  const double e = kernels::sum(per_row);
  return e < 0.0 ? 0.0 : e;
}

double dirichlet_energy_cells(const NodalField& u, const Mesh& mesh,
                              std::span<const int> cell_ids) {
  const int n = mesh.verts_per_cell();
  const int m = u.components;
  double total = 0.0;
  for (int c : cell_ids) {
    const CellGeometry g = cell_geometry(mesh, c);
    const auto vs = mesh.cell(c);
    // grad of each component: sum_s u_s grad(lambda_s)
    for (int comp = 0; comp < m; ++comp) {
      Vec3 gcomp{};
      for (int s = 0; s < n; ++s) {
        const double us = u.node(vs[s])[comp];
        for (int d = 0; d < mesh.dim; ++d) gcomp[d] += us * g.grad[s][d];
      }
      total += g.volume * dot(gcomp, gcomp, mesh.dim);
    }
  }
  return total;
}

double integrate_gradgrad(const NodalField& u, const NodalField& v, const Mesh& mesh) {
  if (u.components != v.components) throw Error("integrate_gradgrad: component mismatch");
  const int nc = mesh.num_cells();
  const int n = mesh.verts_per_cell();
  const int m = u.components;
  std::vector<double> partial(nc);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    const CellGeometry g = cell_geometry(mesh, c);
    const auto vs = mesh.cell(c);
    double acc = 0.0;
    for (int comp = 0; comp < m; ++comp) {
      Vec3 gu{}, gv{};
      for (int s = 0; s < n; ++s) {
        for (int d = 0; d < mesh.dim; ++d) {
          gu[d] += u.node(vs[s])[comp] * g.grad[s][d];
          gv[d] += v.node(vs[s])[comp] * g.grad[s][d];
        }
      }
      acc += g.volume * dot(gu, gv, mesh.dim);
    }
    partial[c] = acc;
  }
  return kernels::sum(partial);
}

double integrate_product(const NodalField& u, const NodalField& v, const Mesh& mesh) {
  if (u.components != v.components) throw Error("integrate_product: component mismatch");
  // exact for P1 x P1: second-order nodal rule per cell
  const int nc = mesh.num_cells();
  const int n = mesh.verts_per_cell();
  const int m = u.components;
  const QuadRule& rule = simplex_rule(mesh.dim, 2);
  std::vector<double> partial(nc);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    const auto vs = mesh.cell(c);
    double acc = 0.0;
    for (int p = 0; p < rule.num_points; ++p) {
      const double* bary = rule.bary.data() + static_cast<std::size_t>(p) * n;
      double prod = 0.0;
      for (int comp = 0; comp < m; ++comp) {
        double up = 0.0, vp = 0.0;
        for (int s = 0; s < n; ++s) {
          up += bary[s] * u.node(vs[s])[comp];
          vp += bary[s] * v.node(vs[s])[comp];
        }
        prod += up * vp;
      }
      acc += rule.weights[p] * prod;
    }
    partial[c] = acc * mesh.cell_volumes[c];
  }
  return kernels::sum(partial);
}

double integrate_interpolant_product(const NodalField& u, const NodalField& v,
                                     const Mesh& mesh) {
  if (u.components != v.components) throw Error("interpolant_product: component mismatch");
  // Integral of the P1 interpolant of u.v: the interpolant is linear per
  // cell, so the integral is the vertex average times the volume.
  const int nc = mesh.num_cells();
  const int n = mesh.verts_per_cell();
  const int m = u.components;
  std::vector<double> partial(nc);
#pragma omp parallel for schedule(static)
  for (int c = 0; c < nc; ++c) {
    const auto vs = mesh.cell(c);
    double acc = 0.0;
    for (int s = 0; s < n; ++s) {
      double duv = 0.0;
      for (int comp = 0; comp < m; ++comp) duv += u.node(vs[s])[comp] * v.node(vs[s])[comp];
      acc += duv;
    }
    partial[c] = acc * mesh.cell_volumes[c] / n;
  }
  return kernels::sum(partial);
}

}  // namespace spherefem
