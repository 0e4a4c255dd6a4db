#include "spherefem/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "spherefem/mesh.hpp"

namespace spherefem {

double SparseOperator::coeff(int r, int c) const {
  const auto cols = row_cols(r);
  const auto it = std::lower_bound(cols.begin(), cols.end(), c);
  if (it == cols.end() || *it != c) return 0.0;
  return values[row_ptr[r] + static_cast<int>(it - cols.begin())];
}

double SparseOperator::max_asymmetry() const {
  double m = 0.0;
  for (int r = 0; r < rows; ++r) {
    const auto cols = row_cols(r);
    const auto vals = row_vals(r);
    for (std::size_t p = 0; p < cols.size(); ++p)
      m = std::max(m, std::abs(vals[p] - coeff(cols[p], r)));
  }
  return m;
}

double SparseOperator::max_abs_row_sum_dev() const {
  double m = 0.0;
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    for (double v : row_vals(r)) s += v;
    m = std::max(m, std::abs(s));
  }
  return m;
}

SparseOperator make_p1_pattern(const Mesh& mesh) {
  const int nv = mesh.num_vertices();
  std::vector<std::vector<int>> nbrs(nv);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto vs = mesh.cell(c);
    for (int a : vs)
      for (int b : vs) nbrs[a].push_back(b);
  }
  SparseOperator A;
  A.rows = A.cols = nv;
  A.row_ptr.assign(nv + 1, 0);
  for (int a = 0; a < nv; ++a) {
    auto& row = nbrs[a];
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end()), row.end());
    A.row_ptr[a + 1] = A.row_ptr[a] + static_cast<int>(row.size());
  }
  A.col_idx.reserve(A.row_ptr[nv]);
  for (int a = 0; a < nv; ++a)
    A.col_idx.insert(A.col_idx.end(), nbrs[a].begin(), nbrs[a].end());
  A.values.assign(A.col_idx.size(), 0.0);
  return A;
}

NodalField::NodalField(const Mesh& m, int comps)
    : mesh(&m), components(comps),
      values(static_cast<std::size_t>(m.num_vertices()) * comps, 0.0) {}

double NodalField::node_norm(int a) const {
  double s = 0.0;
  const double* v = node(a);
  for (int c = 0; c < components; ++c) s += v[c] * v[c];
  return std::sqrt(s);
}

double NodalField::min_node_norm() const {
  double m = node_norm(0);
  for (int a = 1; a < num_nodes(); ++a) m = std::min(m, node_norm(a));
  return m;
}

double NodalField::max_node_norm() const {
  double m = node_norm(0);
  for (int a = 1; a < num_nodes(); ++a) m = std::max(m, node_norm(a));
  return m;
}

}  // namespace spherefem
