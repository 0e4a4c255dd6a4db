#include "spherefem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "spherefem/csv.hpp"
#include "spherefem/sparse.hpp"

namespace spherefem {

namespace {

double simplex_volume(const Mesh& mesh, int c) {
  const auto vs = mesh.cell(c);
  const Vec3 p0 = mesh.vertex(vs[0]);
  if (mesh.dim == 2) {
    const Vec3 p1 = mesh.vertex(vs[1]);
    const Vec3 p2 = mesh.vertex(vs[2]);
    const double d = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
    return 0.5 * d;
  }
  const Vec3 p1 = mesh.vertex(vs[1]);
  const Vec3 p2 = mesh.vertex(vs[2]);
  const Vec3 p3 = mesh.vertex(vs[3]);
  Vec3 a{}, b{}, cvec{};
  for (int d = 0; d < 3; ++d) {
    a[d] = p1[d] - p0[d];
    b[d] = p2[d] - p0[d];
    cvec[d] = p3[d] - p0[d];
  }
  const Vec3 bc = cross(b, cvec);
  return dot(a, bc, 3) / 6.0;
}

double simplex_diameter(const Mesh& mesh, int c) {
  const auto vs = mesh.cell(c);
  double d2 = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      const Vec3 a = mesh.vertex(vs[i]);
      const Vec3 b = mesh.vertex(vs[j]);
      double s = 0.0;
      for (int k = 0; k < mesh.dim; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      d2 = std::max(d2, s);
    }
  return std::sqrt(d2);
}

void finalize(Mesh& mesh) {
  const int nc = mesh.num_cells();
  mesh.cell_volumes.resize(nc);
  mesh.cell_diameters.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const double v = simplex_volume(mesh, c);
    if (!(v > 0.0))
      throw Error("mesh: cell " + std::to_string(c) + " has nonpositive volume");
    mesh.cell_volumes[c] = v;
    mesh.cell_diameters[c] = simplex_diameter(mesh, c);
  }
}

void flag_boundary(Mesh& mesh, double tol = 1e-12) {
  const int nv = mesh.num_vertices();
  mesh.boundary_vertex.assign(nv, 0);
  for (int a = 0; a < nv; ++a) {
    const Vec3 p = mesh.vertex(a);
    for (int d = 0; d < mesh.dim; ++d)
      if (std::abs(p[d] - mesh.box_lo[d]) <= tol || std::abs(p[d] - mesh.box_hi[d]) <= tol)
        mesh.boundary_vertex[a] = 1;
  }
}

}  // namespace

double Mesh::total_volume() const {
  double s = 0.0;
  for (double v : cell_volumes) s += v;
  return s;
}

double Mesh::mesh_size() const {
  double h = 0.0;
  for (double d : cell_diameters) h = std::max(h, d);
  return h;
}

double Mesh::quasi_uniformity() const {
  double lo = cell_diameters[0], hi = cell_diameters[0];
  for (double d : cell_diameters) {
    lo = std::min(lo, d);
    hi = std::max(hi, d);
  }
  return hi / lo;
}

std::array<int, 3> Mesh::locate_box_cell(const Vec3& x) const {
  std::array<int, 3> ij{0, 0, 0};
  for (int d = 0; d < dim; ++d) {
    const double t = (x[d] - box_lo[d]) / spacing[d];
    int i = static_cast<int>(std::floor(t));
    i = std::clamp(i, 0, divisions[d] - 1);
    ij[d] = i;
  }
  return ij;
}

std::vector<int> Mesh::box_cell_simplices(const std::array<int, 3>& ij) const {
  std::vector<int> out;
  if (dim == 2) {
    const int base = 2 * (ij[1] * divisions[0] + ij[0]);
    out = {base, base + 1};
  } else {
    const int base = 6 * ((ij[2] * divisions[1] + ij[1]) * divisions[0] + ij[0]);
    for (int t = 0; t < 6; ++t) out.push_back(base + t);
  }
  return out;
}

Mesh build_structured_2d(int nx, int ny, const Box& box, DiagonalPattern pattern, int phase) {
  if (nx < 1 || ny < 1) throw Error("build_structured_2d: nx, ny must be >= 1");
  Mesh mesh;
  mesh.dim = 2;
  mesh.box_lo = box.lo;
  mesh.box_hi = box.hi;
  mesh.divisions = {nx, ny, 0};
  mesh.pattern = pattern;
  mesh.phase = phase;
  const double dx = (box.hi[0] - box.lo[0]) / nx;
  const double dy = (box.hi[1] - box.lo[1]) / ny;
  if (!(dx > 0.0) || !(dy > 0.0)) throw Error("build_structured_2d: empty box");
  mesh.spacing = {dx, dy, 0.0};

  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * 2);
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      mesh.vertices.push_back(i == nx ? box.hi[0] : box.lo[0] + i * dx);
      mesh.vertices.push_back(j == ny ? box.hi[1] : box.lo[1] + j * dy);
    }

  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  mesh.cells.reserve(static_cast<std::size_t>(nx) * ny * 6);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const int v00 = vid(i, j), v10 = vid(i + 1, j);
      const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      const bool main_diag =
          pattern == DiagonalPattern::uniform ? (phase == 0) : ((i + j + phase) % 2 == 0);
      if (main_diag) {
        // diagonal v00-v11
        mesh.cells.insert(mesh.cells.end(), {v00, v10, v11});
        mesh.cells.insert(mesh.cells.end(), {v00, v11, v01});
      } else {
        // diagonal v10-v01
        mesh.cells.insert(mesh.cells.end(), {v00, v10, v01});
        mesh.cells.insert(mesh.cells.end(), {v10, v11, v01});
      }
    }

  flag_boundary(mesh);
  finalize(mesh);
  return mesh;
}

Mesh build_structured_3d(int nx, int ny, int nz, const Box& box) {
  if (nx < 1 || ny < 1 || nz < 1) throw Error("build_structured_3d: nx, ny, nz must be >= 1");
  Mesh mesh;
  mesh.dim = 3;
  mesh.box_lo = box.lo;
  mesh.box_hi = box.hi;
  mesh.divisions = {nx, ny, nz};
  const double dx = (box.hi[0] - box.lo[0]) / nx;
  const double dy = (box.hi[1] - box.lo[1]) / ny;
  const double dz = (box.hi[2] - box.lo[2]) / nz;
  if (!(dx > 0.0) || !(dy > 0.0) || !(dz > 0.0)) throw Error("build_structured_3d: empty box");
  mesh.spacing = {dx, dy, dz};

  mesh.vertices.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1) * (nz + 1) * 3);
  for (int kk = 0; kk <= nz; ++kk)
    for (int j = 0; j <= ny; ++j)
      for (int i = 0; i <= nx; ++i) {
        mesh.vertices.push_back(i == nx ? box.hi[0] : box.lo[0] + i * dx);
        mesh.vertices.push_back(j == ny ? box.hi[1] : box.lo[1] + j * dy);
        mesh.vertices.push_back(kk == nz ? box.hi[2] : box.lo[2] + kk * dz);
      }

  auto vid = [&](int i, int j, int kk) { return (kk * (ny + 1) + j) * (nx + 1) + i; };

  // Six tetrahedra per box, all sharing the diagonal from corner 000 to 111:
  // walk the axes in each of the six orders. Orders with odd parity are
  // re-oriented to keep volumes positive.
  static const int orders[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1},
                                   {0, 2, 1}, {2, 1, 0}, {1, 0, 2}};
  static const bool odd_perm[6] = {false, false, false, true, true, true};

  mesh.cells.reserve(static_cast<std::size_t>(nx) * ny * nz * 24);
  for (int kk = 0; kk < nz; ++kk)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const int base[3] = {i, j, kk};
        for (int t = 0; t < 6; ++t) {
          int corner[4][3];
          for (int d = 0; d < 3; ++d) corner[0][d] = base[d];
          for (int s = 1; s < 4; ++s) {
            for (int d = 0; d < 3; ++d) corner[s][d] = corner[s - 1][d];
            corner[s][orders[t][s - 1]] += 1;
          }
          int ids[4];
          for (int s = 0; s < 4; ++s) ids[s] = vid(corner[s][0], corner[s][1], corner[s][2]);
          if (odd_perm[t]) std::swap(ids[1], ids[2]);
          mesh.cells.insert(mesh.cells.end(), {ids[0], ids[1], ids[2], ids[3]});
        }
      }

  flag_boundary(mesh);
  finalize(mesh);
  return mesh;
}

AcutenessReport check_h5(const Mesh& mesh, const SparseOperator& stiffness, double tol) {
  if (stiffness.rows != mesh.num_vertices() || stiffness.cols != mesh.num_vertices())
    throw Error("check_h5: stiffness size does not match mesh");
  AcutenessReport rep;
  for (int r = 0; r < stiffness.rows; ++r) {
    const auto cols = stiffness.row_cols(r);
    const auto vals = stiffness.row_vals(r);
    for (std::size_t p = 0; p < cols.size(); ++p) {
      if (cols[p] == r) continue;
      rep.max_offdiag = std::max(rep.max_offdiag, vals[p]);
      if (vals[p] > tol && cols[p] > r) rep.violations.emplace_back(r, cols[p]);
    }
  }
  rep.ok = rep.violations.empty();
  return rep;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << mesh.dim << ' ' << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    for (int d = 0; d < mesh.dim; ++d) {
      if (d) os << ' ';
      os << format_double(mesh.vertices[static_cast<std::size_t>(a) * mesh.dim + d]);
    }
    os << '\n';
  }
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto vs = mesh.cell(c);
    for (std::size_t s = 0; s < vs.size(); ++s) {
      if (s) os << ' ';
      os << vs[s];
    }
    os << '\n';
  }
}

}  // namespace spherefem
