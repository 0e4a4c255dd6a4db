#pragma once

#include <iosfwd>
#include <optional>

#include "spherefem/core.hpp"

namespace spherefem {

struct SparseOperator;

// Which diagonal each grid rectangle uses in 2D.
//   alternating: checkerboard by (i+j) parity; `phase` flips the pattern.
//   uniform:     the same diagonal everywhere (every interior vertex then
//                touches exactly six triangles).
enum class DiagonalPattern { alternating, uniform };

// Simplicial triangulation of an axis-aligned rectangle/box. 2D cells are
// triangles, 3D cells are tetrahedra; both are produced by the structured
// builders below. Immutable after construction, safe to share across threads.
struct Mesh {
  int dim = 2;                       // spatial dimension M, 2 or 3
  std::vector<double> vertices;      // nv * dim, lexicographic (x fastest)
  std::vector<int> cells;            // nc * (dim+1) vertex indices
  std::vector<std::uint8_t> boundary_vertex;
  Vec3 box_lo{}, box_hi{};
  Vec3 spacing{};                    // per-axis grid step
  std::array<int, 3> divisions{};    // nx, ny, nz (nz = 0 in 2D)
  DiagonalPattern pattern = DiagonalPattern::alternating;
  int phase = 0;

  // derived, filled at build time
  std::vector<double> cell_volumes;
  std::vector<double> cell_diameters;

  int num_vertices() const { return static_cast<int>(vertices.size()) / dim; }
  int num_cells() const { return static_cast<int>(cells.size()) / (dim + 1); }
  int verts_per_cell() const { return dim + 1; }

  Vec3 vertex(int a) const {
    Vec3 p{};
    for (int d = 0; d < dim; ++d) p[d] = vertices[static_cast<std::size_t>(a) * dim + d];
    return p;
  }
  std::span<const int> cell(int c) const {
    return {cells.data() + static_cast<std::size_t>(c) * (dim + 1),
            static_cast<std::size_t>(dim + 1)};
  }

  double total_volume() const;
  double mesh_size() const;           // max cell diameter
  double quasi_uniformity() const;    // max h_K / min h_K

  // Index of the grid rectangle/box containing x (2D: pair, 3D: triple).
  // Points exactly on a gridline are assigned to the higher cell; the top
  // boundary clamps down.
  std::array<int, 3> locate_box_cell(const Vec3& x) const;
  // The simplices making up one grid rectangle/box: 2 triangles or 6 tets.
  std::vector<int> box_cell_simplices(const std::array<int, 3>& ij) const;
};

struct Box {
  Vec3 lo{}, hi{};
};

Mesh build_structured_2d(int nx, int ny, const Box& box,
                         DiagonalPattern pattern = DiagonalPattern::alternating,
                         int phase = 0);

// Each box cell is cut into six tetrahedra sharing the main diagonal
// (Kuhn split); the same split is used in every cell.
Mesh build_structured_3d(int nx, int ny, int nz, const Box& box);

// Nonpositivity of the off-diagonal stiffness entries. This is the mesh
// condition under which nodal normalization cannot increase the Dirichlet
// energy, which the Euler scheme relies on.
struct AcutenessReport {
  bool ok = true;
  std::vector<std::pair<int, int>> violations;  // vertex pairs with positive entry
  double max_offdiag = 0.0;
};
AcutenessReport check_h5(const Mesh& mesh, const SparseOperator& stiffness,
                         double tol = 1e-14);

// Plain-text dump: "dim nv nc" header, one vertex per line, one cell per
// line (0-based indices).
void write_mesh(std::ostream& os, const Mesh& mesh);

}  // namespace spherefem
