#pragma once

#include "spherefem/core.hpp"

namespace spherefem {

// Symmetric Gauss rules on the reference simplex in barycentric coordinates.
// Weights sum to one; multiply by the cell volume. Rules are exact for
// polynomials up to the stated degree (a test integrates barycentric
// monomials against the closed form).
struct QuadRule {
  int degree = 0;
  int num_points = 0;
  std::vector<double> bary;     // num_points * (dim+1)
  std::vector<double> weights;  // num_points, sum = 1
};

// dim in {2,3}; degree clamped to the highest available rule.
const QuadRule& simplex_rule(int dim, int degree);
int max_quad_degree(int dim);

}  // namespace spherefem
