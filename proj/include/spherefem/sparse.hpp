#pragma once

#include "spherefem/core.hpp"

namespace spherefem {

struct Mesh;

// Compressed-row sparse matrix. Assembled operators are immutable once built.
struct SparseOperator {
  int rows = 0;
  int cols = 0;
  std::vector<int> row_ptr;   // rows+1
  std::vector<int> col_idx;
  std::vector<double> values;
  bool symmetric = false;

  int nnz() const { return static_cast<int>(values.size()); }

  std::span<const int> row_cols(int r) const {
    return {col_idx.data() + row_ptr[r],
            static_cast<std::size_t>(row_ptr[r + 1] - row_ptr[r])};
  }
  std::span<const double> row_vals(int r) const {
    return {values.data() + row_ptr[r],
            static_cast<std::size_t>(row_ptr[r + 1] - row_ptr[r])};
  }

  // Entry lookup by binary search; zero when not stored.
  double coeff(int r, int c) const;

  double max_asymmetry() const;        // max |A - A^T| over stored entries
  double max_abs_row_sum_dev() const;  // max |sum of row| (stiffness kernel check)
};

// Vertex-vertex sparsity of the P1 operators on a mesh (includes diagonal).
SparseOperator make_p1_pattern(const Mesh& mesh);

// Diagonal of basis-function integrals; the weights of the lumped inner
// product.
struct LumpedMass {
  std::vector<double> weights;
  double total = 0.0;
  int size() const { return static_cast<int>(weights.size()); }
};

// Per-vertex coefficient field: scalar (components=1) or vector
// (components=dim), stored node-major.
struct NodalField {
  const Mesh* mesh = nullptr;
  int components = 1;
  std::vector<double> values;

  NodalField() = default;
  NodalField(const Mesh& m, int comps);

  int num_nodes() const { return static_cast<int>(values.size()) / components; }
  double* node(int a) { return values.data() + static_cast<std::size_t>(a) * components; }
  const double* node(int a) const {
    return values.data() + static_cast<std::size_t>(a) * components;
  }
  Vec3 node_vec(int a) const {
    Vec3 v{};
    for (int c = 0; c < components; ++c) v[c] = node(a)[c];
    return v;
  }
  double node_norm(int a) const;
  double min_node_norm() const;
  double max_node_norm() const;
};

}  // namespace spherefem
