#include "spherefem/quadrature.hpp"

#include <algorithm>

namespace spherefem {

namespace {

QuadRule make_rule(int degree, std::initializer_list<std::initializer_list<double>> pts) {
  QuadRule r;
  r.degree = degree;
  for (const auto& p : pts) {
    auto it = p.begin();
    const double w = *it++;
    r.weights.push_back(w);
    while (it != p.end()) r.bary.push_back(*it++);
  }
  r.num_points = static_cast<int>(r.weights.size());
  return r;
}

// Appends the distinct permutations of a barycentric point with weight w.
void push_perms(QuadRule& r, double w, std::vector<double> b) {
  std::sort(b.begin(), b.end());
  do {
    r.weights.push_back(w);
    for (double v : b) r.bary.push_back(v);
  } while (std::next_permutation(b.begin(), b.end()));
}

QuadRule symmetric_rule(int degree, int dim,
                        std::initializer_list<std::pair<double, std::vector<double>>> groups) {
  QuadRule r;
  r.degree = degree;
  for (const auto& [w, b] : groups) push_perms(r, w, b);
  r.num_points = static_cast<int>(r.weights.size());
  (void)dim;
  return r;
}

std::vector<QuadRule> build_triangle_rules() {
  std::vector<QuadRule> rules;
  rules.push_back(make_rule(1, {{1.0, 1.0 / 3, 1.0 / 3, 1.0 / 3}}));
  rules.push_back(symmetric_rule(2, 2, {{1.0 / 3, {2.0 / 3, 1.0 / 6, 1.0 / 6}}}));
  rules.push_back(symmetric_rule(3, 2,
      {{-27.0 / 48, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
       {25.0 / 48, {0.6, 0.2, 0.2}}}));
  rules.push_back(symmetric_rule(4, 2,
      {{0.109951743655322, {0.816847572980459, 0.091576213509771, 0.091576213509771}},
       {0.223381589678011, {0.108103018168070, 0.445948490915965, 0.445948490915965}}}));
  rules.push_back(symmetric_rule(5, 2,
      {{0.225, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
       {0.132394152788506, {0.059715871789770, 0.470142064105115, 0.470142064105115}},
       {0.125939180544827, {0.797426985353087, 0.101286507323456, 0.101286507323456}}}));
  return rules;
}

std::vector<QuadRule> build_tet_rules() {
  std::vector<QuadRule> rules;
  rules.push_back(make_rule(1, {{1.0, 0.25, 0.25, 0.25, 0.25}}));
  const double a2 = 0.585410196624969;  // (5 + 3 sqrt 5)/20
  const double b2 = 0.138196601125011;  // (5 - sqrt 5)/20
  rules.push_back(symmetric_rule(2, 3, {{0.25, {a2, b2, b2, b2}}}));
  rules.push_back(symmetric_rule(3, 3,
      {{-0.8, {0.25, 0.25, 0.25, 0.25}},
       {0.45, {0.5, 1.0 / 6, 1.0 / 6, 1.0 / 6}}}));
  // 11-point degree-4 rule; weights scaled to sum to one.
  const double c4 = 0.399403576166799;  // (1 + sqrt(5/14))/4
  const double d4 = 0.100596423833201;  // (1 - sqrt(5/14))/4
  rules.push_back(symmetric_rule(4, 3,
      {{6.0 * -74.0 / 5625.0, {0.25, 0.25, 0.25, 0.25}},
       {6.0 * 343.0 / 45000.0, {11.0 / 14, 1.0 / 14, 1.0 / 14, 1.0 / 14}},
       {6.0 * 28.0 / 1125.0, {c4, c4, d4, d4}}}));
  // 15-point degree-5 rule.
  rules.push_back(symmetric_rule(5, 3,
      {{6.0 * 0.030283678097089, {0.25, 0.25, 0.25, 0.25}},
       {6.0 * 0.006026785714286, {0.0, 1.0 / 3, 1.0 / 3, 1.0 / 3}},
       {6.0 * 0.011645249086029, {8.0 / 11, 1.0 / 11, 1.0 / 11, 1.0 / 11}},
       {6.0 * 0.010949141561386,
        {0.066550153573664, 0.066550153573664, 0.433449846426336, 0.433449846426336}}}));
  return rules;
}

const std::vector<QuadRule>& rules_for(int dim) {
  static const std::vector<QuadRule> tri = build_triangle_rules();
  static const std::vector<QuadRule> tet = build_tet_rules();
  if (dim == 2) return tri;
  if (dim == 3) return tet;
  throw Error("simplex_rule: dimension must be 2 or 3");
}

}  // namespace

const QuadRule& simplex_rule(int dim, int degree) {
  const auto& rules = rules_for(dim);
  if (degree < 1) degree = 1;
  for (const auto& r : rules)
    if (r.degree >= degree) return r;
  return rules.back();
}

int max_quad_degree(int dim) { return rules_for(dim).back().degree; }

}  // namespace spherefem
