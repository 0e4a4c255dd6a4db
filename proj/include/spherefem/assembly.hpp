#pragma once

#include <functional>

#include "spherefem/mesh.hpp"
#include "spherefem/sparse.hpp"

namespace spherefem {

// Pointwise function evaluated at a mesh point: writes `components` values.
using PointFn = std::function<void(const Vec3& x, std::span<double> out)>;

// P1 operators. Assembly computes all element matrices in parallel and then
// scatters them in ascending cell order; the serial variants use the same
// order inline, so both paths produce bitwise-identical operators.

SparseOperator assemble_stiffness(const Mesh& mesh);
SparseOperator assemble_stiffness_serial(const Mesh& mesh);

SparseOperator assemble_mass(const Mesh& mesh);
SparseOperator assemble_mass_serial(const Mesh& mesh);

// Geometric lumping: each vertex receives |K|/(dim+1) from every incident
// cell. Row sums of the consistent mass reproduce these weights, which is a
// test, not the definition.
LumpedMass assemble_lumped_mass(const Mesh& mesh);

// Lumped inner product  sum_a mu_a (u_a . v_a), the discrete counterpart of
// integrating the nodal interpolant of u.v.
double inner_h(const NodalField& u, const NodalField& v, const LumpedMass& lm);
double norm_h(const NodalField& u, const LumpedMass& lm);

// Values of f at the vertices. Throws if f is non-finite at a vertex (e.g. a
// singular point landing on a node); no silent perturbation is applied.
NodalField nodal_interpolate(const PointFn& f, const Mesh& mesh, int components);

// L2-orthogonal projection onto the P1 space: solves  mass * q = (f, phi_a)
// with the right side integrated by a simplex rule of the given degree.
NodalField l2_project(const PointFn& f, const Mesh& mesh, const SparseOperator& mass,
                      int quad_degree = 4);
NodalField l2_project(const NodalField& f, const Mesh& mesh, const SparseOperator& mass);

// u_a / |u_a| at every vertex. Throws, naming the vertex, when a nodal vector
// is shorter than eps.
NodalField normalize_nodal(const NodalField& u, double eps = 1e-12);

// |grad u_h|^2 integrated over the domain: sum over components of v^T K v.
double dirichlet_energy(const NodalField& u, const SparseOperator& stiffness);

// Same energy restricted to a set of cells, computed from cell geometry.
double dirichlet_energy_cells(const NodalField& u, const Mesh& mesh,
                              std::span<const int> cell_ids);

// Exact integrals of products of P1 fields, used as an independent check of
// the assembled bilinear forms.
double integrate_gradgrad(const NodalField& u, const NodalField& v, const Mesh& mesh);
double integrate_product(const NodalField& u, const NodalField& v, const Mesh& mesh);
double integrate_interpolant_product(const NodalField& u, const NodalField& v,
                                     const Mesh& mesh);

}  // namespace spherefem
