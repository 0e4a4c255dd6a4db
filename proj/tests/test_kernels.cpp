#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <omp.h>

#include <random>

#include "spherefem/assembly.hpp"
#include "spherefem/kernels.hpp"
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

}  // namespace

TEST_CASE("parallel reductions match the serial reference bitwise") {
  for (std::size_t n : {1u, 7u, 2048u, 2049u, 100000u}) {
    const auto x = random_vector(n, 1);
    const auto y = random_vector(n, 2);
    CHECK(kernels::dot(x, y) == kernels::serial::dot(x, y));
    CHECK(kernels::sum(x) == kernels::serial::sum(x));
  }
}

TEST_CASE("reductions are independent of the thread count") {
  const auto x = random_vector(50001, 3);
  const auto y = random_vector(50001, 4);
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double d1 = kernels::dot(x, y);
  const double s1 = kernels::sum(x);
  omp_set_num_threads(saved > 1 ? saved : 2);
  const double d2 = kernels::dot(x, y);
  const double s2 = kernels::sum(x);
  omp_set_num_threads(saved);
  CHECK(d1 == d2);
  CHECK(s1 == s2);
}

TEST_CASE("chunked dot agrees with a plain loop to roundoff") {
  const auto x = random_vector(12345, 5);
  const auto y = random_vector(12345, 6);
  double plain = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) plain += x[i] * y[i];
  CHECK(std::abs(kernels::dot(x, y) - plain) <= 1e-12 * x.size());
}

TEST_CASE("spmv matches the serial reference bitwise") {
  Mesh mesh = build_structured_2d(17, 13, {{0, 0, 0}, {1, 1, 0}});
  SparseOperator K = assemble_stiffness(mesh);
  const auto x = random_vector(static_cast<std::size_t>(K.rows), 7);
  std::vector<double> y1(K.rows), y2(K.rows);
  kernels::spmv(K, x, y1);
  kernels::serial::spmv(K, x, y2);
  CHECK(y1 == y2);
}

TEST_CASE("axpy and scale_add match their references") {
  const auto x = random_vector(10000, 8);
  auto y1 = random_vector(10000, 9);
  auto y2 = y1;
  kernels::axpy(0.7, x, y1);
  kernels::serial::axpy(0.7, x, y2);
  CHECK(y1 == y2);
  std::vector<double> o1(x.size()), o2(x.size());
  kernels::scale_add(2.0, x, -3.0, y1, o1);
  kernels::serial::scale_add(2.0, x, -3.0, y2, o2);
  CHECK(o1 == o2);
}

TEST_CASE("parallel and serial assembly produce bitwise-identical operators") {
  Mesh mesh2 = build_structured_2d(13, 11, {{-2, -1, 0}, {2, 1, 0}});
  CHECK(assemble_stiffness(mesh2).values == assemble_stiffness_serial(mesh2).values);
  CHECK(assemble_mass(mesh2).values == assemble_mass_serial(mesh2).values);

  Mesh mesh3 = build_structured_3d(5, 4, 3, {{0, 0, 0}, {1, 1, 1}});
  CHECK(assemble_stiffness(mesh3).values == assemble_stiffness_serial(mesh3).values);
  CHECK(assemble_mass(mesh3).values == assemble_mass_serial(mesh3).values);
}
