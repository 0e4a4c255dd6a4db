#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "spherefem/assembly.hpp"
#include "spherefem/kernels.hpp"
#include "spherefem/linsolve.hpp"
#include "spherefem/mesh.hpp"

using namespace spherefem;

namespace {

NodalField random_field(const Mesh& mesh, int comps, unsigned seed, double lo = -1.0,
                        double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  NodalField f(mesh, comps);
  for (auto& v : f.values) v = dist(rng);
  return f;
}

}  // namespace

TEST_CASE("stiffness: constants lie in the kernel") {
  for (const Mesh& mesh : {build_structured_2d(7, 5, {{-2, -1, 0}, {2, 1, 0}}),
                           build_structured_3d(3, 2, 4, {{0, 0, 0}, {2, 1, 3}})}) {
    SparseOperator K = assemble_stiffness(mesh);
    CHECK(K.symmetric);
    CHECK(K.max_asymmetry() <= 1e-14);
    CHECK(K.max_abs_row_sum_dev() <= 1e-12);
    NodalField ones(mesh, 1);
    std::fill(ones.values.begin(), ones.values.end(), 1.0);
    CHECK(dirichlet_energy(ones, K) <= 1e-12);
  }
}

TEST_CASE("stiffness: five-point stencil at an interior vertex (uniform diagonals)") {
  // every interior vertex touches six triangles in the uniform pattern
  const int n = 8;
  Mesh mesh = build_structured_2d(n, n, {{0, 0, 0}, {1, 1, 0}}, DiagonalPattern::uniform);
  SparseOperator K = assemble_stiffness(mesh);
  const int a = 3 * (n + 1) + 3;  // vertex (3,3)
  CHECK(K.coeff(a, a) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(K.coeff(a, a - 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(K.coeff(a, a + 1) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(K.coeff(a, a - (n + 1)) == doctest::Approx(-1.0).epsilon(1e-13));
  CHECK(K.coeff(a, a + (n + 1)) == doctest::Approx(-1.0).epsilon(1e-13));
  // diagonal neighbours carry no coupling on right isoceles triangles
  CHECK(std::abs(K.coeff(a, a + (n + 1) + 1)) <= 1e-14);
}

TEST_CASE("stiffness: energy of the interpolant of x on the unit square is 1") {
  Mesh mesh = build_structured_2d(6, 9, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(mesh);
  NodalField fx = nodal_interpolate(
      [](const Vec3& x, std::span<double> out) { out[0] = x[0]; }, mesh, 1);
  CHECK(dirichlet_energy(fx, K) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("mass matrix of a single reference triangle") {
  Mesh mesh;
  mesh.dim = 2;
  mesh.vertices = {0, 0, 1, 0, 0, 1};
  mesh.cells = {0, 1, 2};
  mesh.boundary_vertex = {1, 1, 1};
  mesh.box_lo = {0, 0, 0};
  mesh.box_hi = {1, 1, 0};
  mesh.spacing = {1, 1, 0};
  mesh.divisions = {1, 1, 0};
  mesh.cell_volumes = {0.5};
  mesh.cell_diameters = {std::sqrt(2.0)};
  SparseOperator M = assemble_mass(mesh);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(M.coeff(i, j) ==
            doctest::Approx(i == j ? 0.5 / 6.0 : 0.5 / 12.0).epsilon(1e-15));
}

TEST_CASE("mass: partition of unity and row sums equal the lumped weights") {
  for (const Mesh& mesh : {build_structured_2d(5, 7, {{-2, -1, 0}, {2, 1, 0}}),
                           build_structured_3d(3, 3, 2, {{0, 0, 0}, {1, 1, 1}})}) {
    SparseOperator M = assemble_mass(mesh);
    CHECK(M.max_asymmetry() <= 1e-14);
    LumpedMass lm = assemble_lumped_mass(mesh);
    NodalField ones(*(&mesh), 1);
    std::fill(ones.values.begin(), ones.values.end(), 1.0);
    std::vector<double> m1(M.rows);
    kernels::spmv(M, ones.values, m1);
    CHECK(kernels::sum(m1) == doctest::Approx(mesh.total_volume()).epsilon(1e-12));
    for (int r = 0; r < M.rows; ++r) {
      double row = 0.0;
      for (double v : M.row_vals(r)) row += v;
      CHECK(row == doctest::Approx(lm.weights[r]).epsilon(1e-13));
    }
  }
}

TEST_CASE("lumped mass: totals, interior weight, and the per-cell oracle") {
  // uniform pattern: interior vertex touches 6 triangles of area h^2/2
  const int n = 8;
  const double h = 1.0 / n;
  Mesh mesh = build_structured_2d(n, n, {{0, 0, 0}, {1, 1, 0}}, DiagonalPattern::uniform);
  LumpedMass lm = assemble_lumped_mass(mesh);
  CHECK(lm.total == doctest::Approx(1.0).epsilon(1e-12));
  const int a = 4 * (n + 1) + 4;
  CHECK(lm.weights[a] == doctest::Approx(h * h).epsilon(1e-13));

  // corner weights depend on diagonal incidence; check direct summation
  Mesh small = build_structured_2d(1, 1, {{0, 0, 0}, {1, 1, 0}});
  LumpedMass lms = assemble_lumped_mass(small);
  std::vector<double> oracle(4, 0.0);
  for (int c = 0; c < small.num_cells(); ++c)
    for (int v : small.cell(c)) oracle[v] += small.cell_volumes[c] / 3.0;
  for (int v = 0; v < 4; ++v)
    CHECK(lms.weights[v] == doctest::Approx(oracle[v]).epsilon(1e-15));
  for (double w : lms.weights) CHECK(w > 0.0);
}

TEST_CASE("lumped inner product") {
  Mesh mesh = build_structured_2d(6, 6, {{-2, -1, 0}, {2, 1, 0}});
  LumpedMass lm = assemble_lumped_mass(mesh);

  NodalField u(mesh, 2), v(mesh, 2);
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    u.node(a)[0] = 1.0;
    v.node(a)[0] = 1.0;
  }
  CHECK(inner_h(u, v, lm) == doctest::Approx(8.0).epsilon(1e-13));

  // nodewise orthogonal fields
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    v.node(a)[0] = 0.0;
    v.node(a)[1] = 2.0;
  }
  CHECK(inner_h(u, v, lm) == doctest::Approx(0.0));

  // random fields: equals the exact integral of the interpolant of u.v
  NodalField ru = random_field(mesh, 2, 11);
  NodalField rv = random_field(mesh, 2, 12);
  CHECK(inner_h(ru, rv, lm) ==
        doctest::Approx(integrate_interpolant_product(ru, rv, mesh)).epsilon(1e-13));

  CHECK(inner_h(ru, ru, lm) > 0.0);
  NodalField zero(mesh, 2);
  CHECK(inner_h(zero, zero, lm) == 0.0);

  NodalField wrong(mesh, 1);
  CHECK_THROWS_AS(inner_h(ru, wrong, lm), Error);
}

TEST_CASE("nodal interpolation") {
  Mesh mesh = build_structured_2d(4, 4, {{0, 0, 0}, {1, 1, 0}});
  NodalField f = nodal_interpolate(
      [](const Vec3& x, std::span<double> out) { out[0] = 2.0 * x[0] - 3.0 * x[1] + 1.0; },
      mesh, 1);
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    const Vec3 p = mesh.vertex(a);
    CHECK(f.node(a)[0] == doctest::Approx(2.0 * p[0] - 3.0 * p[1] + 1.0).epsilon(1e-15));
  }
  // defect field whose singular point sits on a vertex must throw
  CHECK_THROWS_AS(nodal_interpolate(
                      [](const Vec3& x, std::span<double> out) {
                        const double n = std::hypot(x[0] - 0.5, x[1] - 0.5);
                        out[0] = (x[0] - 0.5) / n;
                        out[1] = (x[1] - 0.5) / n;
                      },
                      mesh, 2),
                  Error);
}

TEST_CASE("l2 projection") {
  Mesh mesh = build_structured_2d(8, 8, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator M = assemble_mass(mesh);

  NodalField one =
      l2_project([](const Vec3&, std::span<double> out) { out[0] = 1.0; }, mesh, M);
  for (double v : one.values) CHECK(v == doctest::Approx(1.0).epsilon(1e-11));

  // affine data lies in the space: projection equals interpolation
  NodalField fx = l2_project([](const Vec3& x, std::span<double> out) { out[0] = x[0]; },
                             mesh, M);
  NodalField ix = nodal_interpolate(
      [](const Vec3& x, std::span<double> out) { out[0] = x[0]; }, mesh, 1);
  for (int a = 0; a < mesh.num_vertices(); ++a)
    CHECK(fx.node(a)[0] == doctest::Approx(ix.node(a)[0]).epsilon(1e-10));

  NodalField rf = random_field(mesh, 1, 21);
  NodalField prf = l2_project(rf, mesh, M);
  for (int a = 0; a < mesh.num_vertices(); ++a)
    CHECK(prf.node(a)[0] == doctest::Approx(rf.node(a)[0]).epsilon(1e-10));
}

TEST_CASE("nodal normalization") {
  Mesh mesh = build_structured_2d(6, 6, {{0, 0, 0}, {1, 1, 0}});
  NodalField u(mesh, 2);
  for (int a = 0; a < mesh.num_vertices(); ++a) u.node(a)[0] = 2.0;
  NodalField n = normalize_nodal(u);
  for (int a = 0; a < mesh.num_vertices(); ++a) {
    CHECK(n.node(a)[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(n.node(a)[1] == 0.0);
  }
  NodalField n2 = normalize_nodal(n);
  CHECK(n2.values == n.values);
  u.node(3)[0] = 0.0;
  CHECK_THROWS_WITH_AS(normalize_nodal(u), doctest::Contains("vertex 3"), Error);
}

TEST_CASE("normalization cannot increase the energy on an acute mesh") {
  Mesh mesh = build_structured_2d(12, 12, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(mesh);
  REQUIRE(check_h5(mesh, K).ok);
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    NodalField u(mesh, 2);
    for (int a = 0; a < mesh.num_vertices(); ++a) {
      double x = dist(rng), y = dist(rng);
      const double n = std::max(std::hypot(x, y), 1e-3);
      const double scale = (1.0 + std::abs(dist(rng))) / n;  // nodal norms >= 1
      u.node(a)[0] = x * scale;
      u.node(a)[1] = y * scale;
    }
    NodalField nu = normalize_nodal(u);
    CHECK(dirichlet_energy(nu, K) <= dirichlet_energy(u, K) * (1.0 + 1e-12));
  }
}

TEST_CASE("dirichlet energy of the interpolant of (x, y) is 2") {
  Mesh mesh = build_structured_2d(5, 8, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(mesh);
  NodalField u = nodal_interpolate(
      [](const Vec3& x, std::span<double> out) {
        out[0] = x[0];
        out[1] = x[1];
      },
      mesh, 2);
  CHECK(dirichlet_energy(u, K) == doctest::Approx(2.0).epsilon(1e-13));
  NodalField c(mesh, 2);
  std::fill(c.values.begin(), c.values.end(), 0.7);
  CHECK(dirichlet_energy(c, K) <= 1e-12);
}

TEST_CASE("assembled forms match the exact per-cell integration oracle") {
  for (const Mesh& mesh : {build_structured_2d(9, 7, {{-2, -1, 0}, {2, 1, 0}}),
                           build_structured_3d(3, 4, 2, {{0, 0, 0}, {1, 1, 1}})}) {
    SparseOperator K = assemble_stiffness(mesh);
    SparseOperator M = assemble_mass(mesh);
    std::mt19937 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      NodalField u = random_field(mesh, 1, rng());
      NodalField v = random_field(mesh, 1, rng());
      std::vector<double> Kv(K.rows), Mv(M.rows);
      kernels::spmv(K, v.values, Kv);
      kernels::spmv(M, v.values, Mv);
      const double uKv = kernels::dot(u.values, Kv);
      const double uMv = kernels::dot(u.values, Mv);
      const double oracle_K = integrate_gradgrad(u, v, mesh);
      const double oracle_M = integrate_product(u, v, mesh);
      CHECK(std::abs(uKv - oracle_K) <= 1e-13 * std::max(1.0, std::abs(oracle_K)));
      CHECK(std::abs(uMv - oracle_M) <= 1e-13 * std::max(1.0, std::abs(oracle_M)));
    }
  }
}

TEST_CASE("lumped norm bound") {
  Mesh mesh = build_structured_2d(7, 7, {{-2, -1, 0}, {2, 1, 0}});
  LumpedMass lm = assemble_lumped_mass(mesh);
  NodalField u = random_field(mesh, 2, 55);
  double maxn = 0.0;
  for (int a = 0; a < mesh.num_vertices(); ++a) maxn = std::max(maxn, u.node_norm(a));
  CHECK(inner_h(u, u, lm) <= 8.0 * maxn * maxn * (1.0 + 1e-12));
}
