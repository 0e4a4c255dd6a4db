#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "spherefem/quadrature.hpp"

using namespace spherefem;

namespace {

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

// Exact integral of a barycentric monomial over the unit-volume simplex:
// integral of prod lambda_i^{e_i} = dim! * prod(e_i!) / (sum(e_i) + dim)!
double monomial_integral(std::span<const int> exps, int dim) {
  double num = factorial(dim);
  int total = 0;
  for (int e : exps) {
    num *= factorial(e);
    total += e;
  }
  return num / factorial(total + dim);
}

double quadrature_value(const QuadRule& rule, std::span<const int> exps, int dim) {
  double s = 0.0;
  for (int p = 0; p < rule.num_points; ++p) {
    double v = 1.0;
    for (int i = 0; i <= dim; ++i)
      v *= std::pow(rule.bary[static_cast<std::size_t>(p) * (dim + 1) + i], exps[i]);
    s += rule.weights[p] * v;
  }
  return s;
}

void check_monomials(int dim, int degree) {
  const QuadRule& rule = simplex_rule(dim, degree);
  REQUIRE(rule.degree >= degree);
  std::vector<int> exps(dim + 1, 0);
  std::function<void(int, int)> rec = [&](int pos, int remaining) {
    if (pos == dim) {
      for (int e = 0; e <= remaining; ++e) {
        exps[pos] = e;
        const double exact = monomial_integral(exps, dim);
        const double quad = quadrature_value(rule, exps, dim);
        CAPTURE(dim);
        CAPTURE(degree);
        CHECK(std::abs(quad - exact) <= 1e-14 * std::max(1.0, std::abs(exact)));
      }
      return;
    }
    for (int e = 0; e <= remaining; ++e) {
      exps[pos] = e;
      rec(pos + 1, remaining - e);
    }
  };
  rec(0, rule.degree);
}

}  // namespace

TEST_CASE("triangle rules integrate monomials exactly up to their degree") {
  for (int d = 1; d <= max_quad_degree(2); ++d) check_monomials(2, d);
}

TEST_CASE("tetrahedron rules integrate monomials exactly up to their degree") {
  for (int d = 1; d <= max_quad_degree(3); ++d) check_monomials(3, d);
}

TEST_CASE("weights sum to one") {
  for (int dim : {2, 3})
    for (int d = 1; d <= max_quad_degree(dim); ++d) {
      const QuadRule& rule = simplex_rule(dim, d);
      double s = 0.0;
      for (double w : rule.weights) s += w;
      CHECK(std::abs(s - 1.0) <= 1e-14);
    }
}

TEST_CASE("degree request clamps to the largest rule") {
  CHECK(simplex_rule(2, 99).degree == max_quad_degree(2));
  CHECK(simplex_rule(3, 99).degree == max_quad_degree(3));
}
