#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "spherefem/assembly.hpp"
#include "spherefem/mesh.hpp"
#include "spherefem/sparse.hpp"

using namespace spherefem;

namespace {

double shoelace_area(const Mesh& mesh, int c) {
  const auto vs = mesh.cell(c);
  const Vec3 a = mesh.vertex(vs[0]), b = mesh.vertex(vs[1]), d = mesh.vertex(vs[2]);
  return 0.5 * std::abs((b[0] - a[0]) * (d[1] - a[1]) - (d[0] - a[0]) * (b[1] - a[1]));
}

void check_invariants(const Mesh& mesh, double box_volume) {
  for (double v : mesh.cell_volumes) CHECK(v > 0.0);
  CHECK(mesh.total_volume() == doctest::Approx(box_volume).epsilon(1e-12));

  std::set<int> used;
  for (int v : mesh.cells) {
    CHECK(v >= 0);
    CHECK(v < mesh.num_vertices());
    used.insert(v);
  }
  CHECK(static_cast<int>(used.size()) == mesh.num_vertices());

  for (int a = 0; a < mesh.num_vertices(); ++a) {
    const Vec3 p = mesh.vertex(a);
    bool on_box = false;
    for (int d = 0; d < mesh.dim; ++d)
      if (std::abs(p[d] - mesh.box_lo[d]) <= 1e-12 || std::abs(p[d] - mesh.box_hi[d]) <= 1e-12)
        on_box = true;
    CHECK(static_cast<bool>(mesh.boundary_vertex[a]) == on_box);
  }
}

std::size_t hash_mesh(const Mesh& mesh) {
  std::size_t h = 1469598103934665603ull;
  auto mix = [&](const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= b[i];
      h *= 1099511628211ull;
    }
  };
  mix(mesh.vertices.data(), mesh.vertices.size() * sizeof(double));
  mix(mesh.cells.data(), mesh.cells.size() * sizeof(int));
  return h;
}

}  // namespace

TEST_CASE("single-cell 2D decomposition") {
  Mesh mesh = build_structured_2d(1, 1, {{0, 0, 0}, {1, 1, 0}});
  CHECK(mesh.num_vertices() == 4);
  CHECK(mesh.num_cells() == 2);
  CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-15));
  check_invariants(mesh, 1.0);
}

TEST_CASE("34x17 grid on (-2,2)x(-1,1) is isotropic") {
  Mesh mesh = build_structured_2d(34, 17, {{-2, -1, 0}, {2, 1, 0}});
  CHECK(mesh.num_cells() == 1156);
  CHECK(mesh.num_vertices() == 35 * 18);
  CHECK(mesh.spacing[0] == doctest::Approx(2.0 / 17).epsilon(1e-15));
  CHECK(mesh.spacing[1] == doctest::Approx(2.0 / 17).epsilon(1e-15));
  check_invariants(mesh, 8.0);
}

TEST_CASE("2x2 unit square: every triangle has area 1/8") {
  Mesh mesh = build_structured_2d(2, 2, {{0, 0, 0}, {1, 1, 0}});
  for (int c = 0; c < mesh.num_cells(); ++c) {
    CHECK(mesh.cell_volumes[c] == doctest::Approx(0.125).epsilon(1e-14));
    CHECK(mesh.cell_volumes[c] == doctest::Approx(shoelace_area(mesh, c)).epsilon(1e-14));
  }
  check_invariants(mesh, 1.0);
}

TEST_CASE("single-cell 3D decomposition") {
  Mesh mesh = build_structured_3d(1, 1, 1, {{0, 0, 0}, {1, 1, 1}});
  CHECK(mesh.num_vertices() == 8);
  CHECK(mesh.num_cells() == 6);
  CHECK(mesh.total_volume() == doctest::Approx(1.0).epsilon(1e-14));
  check_invariants(mesh, 1.0);
}

TEST_CASE("20x17x17 grid cell count and volume partition") {
  Mesh mesh = build_structured_3d(20, 17, 17, {{-2, -1, -1}, {2, 1, 1}});
  CHECK(mesh.num_cells() == 34680);
  CHECK(mesh.num_vertices() == 21 * 18 * 18);
  check_invariants(mesh, 16.0);
}

TEST_CASE("meshes are bitwise deterministic") {
  const Box box{{-2, -1, 0}, {2, 1, 0}};
  CHECK(hash_mesh(build_structured_2d(12, 7, box)) ==
        hash_mesh(build_structured_2d(12, 7, box)));
  CHECK(hash_mesh(build_structured_3d(4, 3, 5, {{0, 0, 0}, {1, 2, 3}})) ==
        hash_mesh(build_structured_3d(4, 3, 5, {{0, 0, 0}, {1, 2, 3}})));
}

TEST_CASE("quasi-uniformity ratio is constant across refinements") {
  const Box box{{0, 0, 0}, {1, 1, 0}};
  const double r1 = build_structured_2d(8, 8, box).quasi_uniformity();
  const double r2 = build_structured_2d(16, 16, box).quasi_uniformity();
  const double r3 = build_structured_2d(32, 32, box).quasi_uniformity();
  CHECK(r1 == doctest::Approx(r2).epsilon(1e-13));
  CHECK(r2 == doctest::Approx(r3).epsilon(1e-13));
}

TEST_CASE("diagonal pattern flags change the triangulation but not the volume") {
  const Box box{{0, 0, 0}, {1, 1, 0}};
  Mesh alt0 = build_structured_2d(4, 4, box, DiagonalPattern::alternating, 0);
  Mesh alt1 = build_structured_2d(4, 4, box, DiagonalPattern::alternating, 1);
  Mesh uni = build_structured_2d(4, 4, box, DiagonalPattern::uniform);
  CHECK(alt0.cells != alt1.cells);
  CHECK(alt0.cells != uni.cells);
  CHECK(alt0.total_volume() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(alt1.total_volume() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(uni.total_volume() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("acute-mesh check: isotropic and 8:5 anisotropic 2D grids pass") {
  Mesh iso = build_structured_2d(16, 16, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(iso);
  auto rep = check_h5(iso, K);
  CHECK(rep.ok);
  CHECK(rep.violations.empty());

  // right-triangle grids stay nonobtuse at any aspect ratio
  Mesh aniso = build_structured_2d(54, 17, {{-2, -1, 0}, {2, 1, 0}});
  auto rep2 = check_h5(aniso, assemble_stiffness(aniso));
  CHECK(rep2.ok);
}

TEST_CASE("acute-mesh check agrees with brute-force off-diagonal enumeration") {
  for (const Mesh& mesh :
       {build_structured_2d(9, 5, {{-2, -1, 0}, {2, 1, 0}}),
        build_structured_3d(3, 3, 3, {{0, 0, 0}, {1, 1, 1}})}) {
    SparseOperator K = assemble_stiffness_serial(mesh);
    auto rep = check_h5(mesh, K);
    bool all_nonpositive = true;
    for (int r = 0; r < K.rows; ++r) {
      const auto cols = K.row_cols(r);
      const auto vals = K.row_vals(r);
      for (std::size_t p = 0; p < cols.size(); ++p)
        if (cols[p] != r && vals[p] > 1e-14) all_nonpositive = false;
    }
    CHECK(rep.ok == all_nonpositive);
  }
}

TEST_CASE("3D six-tet split satisfies the acute-mesh condition") {
  Mesh mesh = build_structured_3d(4, 4, 4, {{0, 0, 0}, {1, 1, 1}});
  auto rep = check_h5(mesh, assemble_stiffness(mesh));
  CHECK(rep.ok);
}

TEST_CASE("check_h5 rejects a mismatched operator") {
  Mesh mesh = build_structured_2d(4, 4, {{0, 0, 0}, {1, 1, 0}});
  Mesh other = build_structured_2d(5, 5, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(other);
  CHECK_THROWS_AS(check_h5(mesh, K), Error);
}

TEST_CASE("mesh dump format") {
  Mesh mesh = build_structured_2d(1, 1, {{0, 0, 0}, {1, 1, 0}});
  std::ostringstream os;
  write_mesh(os, mesh);
  std::istringstream is(os.str());
  int dim, nv, nc;
  is >> dim >> nv >> nc;
  CHECK(dim == 2);
  CHECK(nv == 4);
  CHECK(nc == 2);
  std::string line;
  std::getline(is, line);
  int lines = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++lines;
  CHECK(lines == nv + nc);
}

TEST_CASE("box-cell lookup assigns gridline points to the upper cell") {
  Mesh mesh = build_structured_2d(4, 4, {{0, 0, 0}, {1, 1, 0}});
  auto ij = mesh.locate_box_cell({0.5, 0.5, 0.0});
  CHECK(ij[0] == 2);
  CHECK(ij[1] == 2);
  auto top = mesh.locate_box_cell({1.0, 1.0, 0.0});
  CHECK(top[0] == 3);
  CHECK(top[1] == 3);
  auto cells = mesh.box_cell_simplices({1, 2, 0});
  CHECK(cells.size() == 2);
  CHECK(cells[0] == 2 * (2 * 4 + 1));
}

TEST_CASE("invalid sizes are rejected") {
  CHECK_THROWS_AS(build_structured_2d(0, 1, {{0, 0, 0}, {1, 1, 0}}), Error);
  CHECK_THROWS_AS(build_structured_3d(1, 0, 1, {{0, 0, 0}, {1, 1, 1}}), Error);
}
