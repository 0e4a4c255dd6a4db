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

std::vector<double> random_vector(std::size_t n, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

double residual(const SparseOperator& A, std::span<const double> x,
                std::span<const double> b) {
  std::vector<double> r(b.size());
  kernels::spmv(A, x, r);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += (r[i] - b[i]) * (r[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num) / std::sqrt(den > 0.0 ? den : 1.0);
}

// Euler-like step system on a mesh: A = diag(mu/k) + gamma K per component,
// coupling gamma * dir, nodal constraint rows dir . u = rhs.
struct TestSystem {
  Mesh mesh;
  SparseOperator K, M;
  LumpedMass lm;
  std::vector<double> node_scale, coupling, constraint, rhs_u, rhs_q;
  SaddleSystem sys;

  TestSystem(int n, double k, double gamma, unsigned seed, bool constant_dir = false)
      : mesh(build_structured_2d(n, n, {{0, 0, 0}, {1, 1, 0}})) {
    K = assemble_stiffness(mesh);
    M = assemble_mass(mesh);
    lm = assemble_lumped_mass(mesh);
    const int nv = mesh.num_vertices();
    node_scale.resize(nv);
    coupling.resize(2 * nv);
    constraint.resize(2 * nv);
    rhs_u = random_vector(2 * nv, seed);
    rhs_q = random_vector(nv, seed + 1);
    std::mt19937 rng(seed + 2);
    std::uniform_real_distribution<double> angle(0.0, 6.28);
    for (int a = 0; a < nv; ++a) {
      node_scale[a] = lm.weights[a] / k;
      const double phi = constant_dir ? 0.3 : angle(rng);
      // unit direction scaled differently in coupling and constraint rows
      coupling[2 * a] = gamma * std::cos(phi);
      coupling[2 * a + 1] = gamma * std::sin(phi);
      constraint[2 * a] = 1.7 * std::cos(phi);
      constraint[2 * a + 1] = 1.7 * std::sin(phi);
    }
    sys.num_nodes = nv;
    sys.components = 2;
    sys.stiffness = &K;
    sys.mass = &M;
    sys.node_scale = node_scale;
    sys.stiff_scale = gamma;
    sys.coupling = coupling;
    sys.constraint_dir = constraint;
    sys.rhs_u = rhs_u;
    sys.rhs_q = rhs_q;
  }
};

}  // namespace

TEST_CASE("solve_spd: mass matrix reproduces the all-ones vector") {
  Mesh mesh = build_structured_2d(8, 8, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator M = assemble_mass(mesh);
  std::vector<double> ones(M.rows, 1.0), b(M.rows);
  kernels::spmv(M, ones, b);
  for (auto method : {SpdMethod::direct, SpdMethod::cg}) {
    SpdOptions opts;
    opts.method = method;
    auto x = solve_spd(M, b, opts);
    for (double v : x) CHECK(v == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("solve_spd: K + M with a random right side") {
  Mesh mesh = build_structured_2d(10, 10, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(mesh);
  SparseOperator M = assemble_mass(mesh);
  SparseOperator A = K;
  for (int r = 0; r < A.rows; ++r)
    for (int p = A.row_ptr[r]; p < A.row_ptr[r + 1]; ++p)
      A.values[p] += M.coeff(r, A.col_idx[p]);
  const auto b = random_vector(A.rows, 77);
  for (auto method : {SpdMethod::direct, SpdMethod::cg}) {
    SpdOptions opts;
    opts.method = method;
    auto x = solve_spd(A, b, opts);
    CHECK(residual(A, x, b) <= 1e-11);
  }
}

TEST_CASE("solve_spd: 1x1 system") {
  SparseOperator A;
  A.rows = A.cols = 1;
  A.row_ptr = {0, 1};
  A.col_idx = {0};
  A.values = {4.0};
  const std::vector<double> b{2.0};
  CHECK(solve_spd(A, b)[0] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("solve_spd rejects an indefinite operator") {
  SparseOperator A;
  A.rows = A.cols = 2;
  A.row_ptr = {0, 2, 4};
  A.col_idx = {0, 1, 0, 1};
  A.values = {1.0, 2.0, 2.0, 1.0};  // eigenvalues 3 and -1
  const std::vector<double> b{1.0, 1.0};
  SpdOptions cg;
  cg.method = SpdMethod::cg;
  CHECK_THROWS_AS(solve_spd(A, b, cg), Error);
}

TEST_CASE("saddle: no constraint rows reduces to the A-block solve") {
  TestSystem ts(6, 0.05, 0.7, 101);
  ts.sys.coupling = {};
  ts.sys.constraint_dir = {};
  ts.sys.rhs_q = {};
  for (auto method : {SaddleMethod::direct, SaddleMethod::uzawa}) {
    SaddleOptions opts;
    opts.method = method;
    auto sol = solve_saddle(ts.sys, opts);
    CHECK(sol.q.empty());
    CHECK(sol.kkt_residual <= 1e-12);
  }
}

TEST_CASE("saddle: direct and Uzawa agree on random well-conditioned systems") {
  for (unsigned seed : {11u, 12u, 13u}) {
    TestSystem ts(7, 0.05, 0.8, seed);
    SaddleOptions direct;
    SaddleOptions uzawa;
    uzawa.method = SaddleMethod::uzawa;
    auto s1 = solve_saddle(ts.sys, direct);
    auto s2 = solve_saddle(ts.sys, uzawa);
    CHECK(s1.kkt_residual <= 1e-12);
    CHECK(s2.kkt_residual <= 1e-12);
    double du = 0.0, nu = 0.0, dq = 0.0, nq = 0.0;
    for (std::size_t i = 0; i < s1.u.size(); ++i) {
      du += (s1.u[i] - s2.u[i]) * (s1.u[i] - s2.u[i]);
      nu += s1.u[i] * s1.u[i];
    }
    for (std::size_t i = 0; i < s1.q.size(); ++i) {
      dq += (s1.q[i] - s2.q[i]) * (s1.q[i] - s2.q[i]);
      nq += s1.q[i] * s1.q[i];
    }
    CHECK(std::sqrt(du / nu) <= 1e-8);
    CHECK(std::sqrt(dq / nq) <= 1e-8);
  }
}

TEST_CASE("saddle: repeated solves are bitwise identical") {
  TestSystem ts(6, 0.1, 0.5, 21);
  for (auto method : {SaddleMethod::direct, SaddleMethod::uzawa}) {
    SaddleOptions opts;
    opts.method = method;
    auto s1 = solve_saddle(ts.sys, opts);
    auto s2 = solve_saddle(ts.sys, opts);
    CHECK(s1.u == s2.u);
    CHECK(s1.q == s2.q);
  }
}

TEST_CASE("saddle: nodal and mass-weighted constraint rows give the same solution") {
  for (unsigned seed : {31u, 32u}) {
    TestSystem ts(6, 0.05, 0.9, seed);
    auto nodal = solve_saddle(ts.sys, {});
    ts.sys.mass_weighted_rows = true;
    auto weighted = solve_saddle(ts.sys, {});
    double du = 0.0, nu = 0.0;
    for (std::size_t i = 0; i < nodal.u.size(); ++i) {
      du += (nodal.u[i] - weighted.u[i]) * (nodal.u[i] - weighted.u[i]);
      nu += nodal.u[i] * nodal.u[i];
    }
    CHECK(std::sqrt(du / nu) <= 1e-12);
    double dq = 0.0, nq = 0.0;
    for (std::size_t i = 0; i < nodal.q.size(); ++i) {
      dq += (nodal.q[i] - weighted.q[i]) * (nodal.q[i] - weighted.q[i]);
      nq += nodal.q[i] * nodal.q[i];
    }
    CHECK(std::sqrt(dq / nq) <= 1e-12);
  }
}

TEST_CASE("saddle: constant direction field with zero constraint right side") {
  TestSystem ts(6, 0.05, 0.7, 41, /*constant_dir=*/true);
  std::fill(ts.rhs_q.begin(), ts.rhs_q.end(), 0.0);
  auto sol = solve_saddle(ts.sys, {});
  CHECK(sol.kkt_residual <= 1e-12);
  // constraint rows annihilate the solution componentwise
  for (int a = 0; a < ts.sys.num_nodes; ++a) {
    const double g0 = ts.constraint[2 * a], g1 = ts.constraint[2 * a + 1];
    CHECK(std::abs(g0 * sol.u[2 * a] + g1 * sol.u[2 * a + 1]) <= 1e-10);
  }
}

TEST_CASE("saddle: vanishing constraint direction names the node") {
  TestSystem ts(5, 0.05, 0.7, 51);
  ts.constraint[2 * 7] = 0.0;
  ts.constraint[2 * 7 + 1] = 0.0;
  CHECK_THROWS_WITH_AS(solve_saddle(ts.sys, {}), doctest::Contains("node 7"), Error);
  SaddleOptions uzawa;
  uzawa.method = SaddleMethod::uzawa;
  CHECK_THROWS_AS(solve_saddle(ts.sys, uzawa), Error);
}

TEST_CASE("saddle: Uzawa rejects alpha > 0 and non-parallel rows") {
  TestSystem ts(5, 0.05, 0.7, 61);
  SaddleOptions uzawa;
  uzawa.method = SaddleMethod::uzawa;
  // perturb one constraint direction off the coupling direction
  ts.constraint[2 * 3] += 0.5;
  CHECK_THROWS_AS(solve_saddle(ts.sys, uzawa), Error);
}
