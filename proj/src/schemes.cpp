#include "spherefem/schemes.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "spherefem/analysis.hpp"
#include "spherefem/csv.hpp"
#include "spherefem/kernels.hpp"

namespace spherefem {

namespace {
constexpr double kNormGuard = 1e-12;
}

int ModelParams::num_steps() const {
  const double n = T / k;
  const long long r = std::llround(n);
  if (r < 0 || std::abs(n - static_cast<double>(r)) > 1e-9 * std::max(1.0, n))
    throw Error("ModelParams: T must be an integer multiple of k");
  return static_cast<int>(r);
}

void ModelParams::validate(int dim) const {
  if (!(gamma > 0.0)) throw Error("ModelParams: gamma must be positive");
  if (alpha < 0.0) throw Error("ModelParams: alpha must be nonnegative");
  if (dim == 2 && alpha != 0.0) throw Error("ModelParams: alpha must be 0 in 2D");
  if (!(k > 0.0)) throw Error("ModelParams: time step must be positive");
  num_steps();
}

Operators Operators::assemble(const Mesh& mesh) {
  Operators ops;
  ops.stiffness = assemble_stiffness(mesh);
  ops.mass = assemble_mass(mesh);
  ops.lumped = assemble_lumped_mass(mesh);
  return ops;
}

NodalField prepare_initial(const PointFn& u0, const Mesh& mesh) {
  NodalField raw = nodal_interpolate(u0, mesh, mesh.dim);
  return normalize_nodal(raw, kNormGuard);
}

namespace {

double lumped_norm(std::span<const double> v, const LumpedMass& lm, int m) {
  double s = 0.0;
  for (int a = 0; a < lm.size(); ++a) {
    const double* va = v.data() + static_cast<std::size_t>(a) * m;
    double n = 0.0;
    for (int c = 0; c < m; ++c) n += va[c] * va[c];
    s += lm.weights[a] * n;
  }
  return std::sqrt(s);
}

}  // namespace

StepReport euler_step(StepState& state, const ModelParams& params, const Operators& ops,
                      SaddleSolver& solver) {
  const Mesh& mesh = *state.u.mesh;
  const int nv = mesh.num_vertices();
  const int m = state.u.components;
  const double k = params.k;
  const double energy_old = dirichlet_energy(state.u, ops.stiffness);

  std::vector<double> node_scale(nv), coupling(static_cast<std::size_t>(nv) * m),
      rhs_u(static_cast<std::size_t>(nv) * m), rhs_q(nv);
  for (int a = 0; a < nv; ++a) {
    const double na = state.u.node_norm(a);
    if (na < 1.0 - 1e-8)
      throw Error("euler_step: nodal norm below 1 at vertex " + std::to_string(a));
    node_scale[a] = ops.lumped.weights[a] / k;
    const double* ua = state.u.node(a);
    double g2 = 0.0;
    for (int c = 0; c < m; ++c) {
      coupling[static_cast<std::size_t>(a) * m + c] = params.gamma * ua[c] / na;
      rhs_u[static_cast<std::size_t>(a) * m + c] = node_scale[a] * ua[c];
      g2 += ua[c] * ua[c];
    }
    rhs_q[a] = g2;
  }

  SaddleSystem sys;
  sys.num_nodes = nv;
  sys.components = m;
  sys.stiffness = &ops.stiffness;
  sys.mass = &ops.mass;
  sys.node_scale = node_scale;
  sys.stiff_scale = params.gamma;
  sys.alpha = params.alpha;
  if (params.alpha != 0.0) sys.skew_axis = state.u.values;
  sys.coupling = coupling;
  sys.constraint_dir = state.u.values;
  sys.rhs_u = rhs_u;
  sys.rhs_q = rhs_q;

  SaddleSolution sol = solver.solve(sys);

  NodalField u_new(mesh, m);
  u_new.values = std::move(sol.u);

  StepReport rep;
  rep.time = state.time + k;
  rep.energy = dirichlet_energy(u_new, ops.stiffness);

  // dissipation of this step: k (|du/dt|_h^2 + (gamma k / 2) |grad du/dt|^2)
  NodalField incr(mesh, m);
  kernels::scale_add(1.0 / k, u_new.values, -1.0 / k, state.u.values, incr.values);
  const double dt_h = lumped_norm(incr.values, ops.lumped, m);
  const double dt_grad = dirichlet_energy(incr, ops.stiffness);
  rep.dissipation = k * (dt_h * dt_h + 0.5 * params.gamma * k * dt_grad);
  rep.energy_residual =
      std::abs(rep.dissipation + 0.5 * params.gamma * (rep.energy - energy_old));
  rep.min_norm = u_new.min_node_norm();
  rep.max_norm = u_new.max_node_norm();
  rep.fp_iters = 0;
  rep.q_negnorm = std::numeric_limits<double>::quiet_NaN();

  state.u = std::move(u_new);
  state.q.mesh = &mesh;
  state.q.components = 1;
  state.q.values = std::move(sol.q);
  state.time = rep.time;
  return rep;
}

StepReport cn_step(StepState& state, const ModelParams& params, const Operators& ops,
                   SaddleSolver& solver, const CnOptions& cn) {
  if (params.alpha != 0.0)
    throw Error("cn_step: the Crank-Nicolson scheme is implemented for alpha = 0");
  const Mesh& mesh = *state.u.mesh;
  const int nv = mesh.num_vertices();
  const int m = state.u.components;
  const double k = params.k;
  const double gk2 = 0.5 * params.gamma * k;

  if (cn.renormalize) state.u = normalize_nodal(state.u, kNormGuard);
  const double energy_old = dirichlet_energy(state.u, ops.stiffness);

  std::vector<double> node_scale(nv), coupling(static_cast<std::size_t>(nv) * m),
      rhs_u(static_cast<std::size_t>(nv) * m), rhs_q(nv);
  for (int a = 0; a < nv; ++a) {
    node_scale[a] = ops.lumped.weights[a];
    for (int c = 0; c < m; ++c)
      rhs_u[static_cast<std::size_t>(a) * m + c] =
          node_scale[a] * state.u.node(a)[c];
  }

  SaddleSystem sys;
  sys.num_nodes = nv;
  sys.components = m;
  sys.stiffness = &ops.stiffness;
  sys.mass = &ops.mass;
  sys.node_scale = node_scale;
  sys.stiff_scale = gk2;
  sys.coupling = coupling;
  sys.constraint_dir = coupling;
  sys.rhs_u = rhs_u;
  sys.rhs_q = rhs_q;

  // fixed point on the half-step unknowns, starting from u^n
  NodalField w = state.u;
  std::vector<double> s_half(nv, 0.0);
  if (state.q.values.size() == static_cast<std::size_t>(nv)) {
    s_half = state.q.values;
    solver.set_initial_multiplier(s_half);
  }

  int iters = 0;
  std::vector<double> w_prev(w.values.size());
  NodalField d(mesh, m);
  while (true) {
    if (++iters > cn.fp_maxiter) {
      kernels::scale_add(1.0, w.values, -1.0, w_prev, d.values);
      throw Error("cn_step: fixed point did not converge within " +
                  std::to_string(cn.fp_maxiter) + " iterations (last increment " +
                  format_double(norm_h(d, ops.lumped)) + ")");
    }
    for (int a = 0; a < nv; ++a) {
      const double wn = w.node_norm(a);
      if (wn < kNormGuard)
        throw Error("cn_step: half-step vector vanished at vertex " + std::to_string(a));
      const double* wa = w.node(a);
      const double* ua = state.u.node(a);
      double un2 = 0.0, pu = 0.0;
      for (int c = 0; c < m; ++c) {
        const double pc = gk2 * wa[c] / wn;
        coupling[static_cast<std::size_t>(a) * m + c] = pc;
        pu += pc * ua[c];
        un2 += ua[c] * ua[c];
      }
      const double gamma_corr = gk2 * (1.0 - un2) / (4.0 * wn);
      rhs_q[a] = pu + gamma_corr;
    }

    SaddleSolution sol = solver.solve(sys);
    w_prev.swap(w.values);
    w.values = std::move(sol.u);
    s_half = std::move(sol.q);

    kernels::scale_add(1.0, w.values, -1.0, w_prev, d.values);
    const double incr = norm_h(d, ops.lumped);
    if (incr <= cn.fp_tol * lumped_norm(w_prev, ops.lumped, m)) break;
  }

  NodalField u_new(mesh, m);
  kernels::scale_add(2.0, w.values, -1.0, state.u.values, u_new.values);

  StepReport rep;
  rep.time = state.time + k;
  rep.energy = dirichlet_energy(u_new, ops.stiffness);
  NodalField incr(mesh, m);
  kernels::scale_add(1.0 / k, u_new.values, -1.0 / k, state.u.values, incr.values);
  const double dt_h = lumped_norm(incr.values, ops.lumped, m);
  rep.dissipation = k * dt_h * dt_h;
  rep.energy_residual =
      std::abs(rep.dissipation + 0.5 * params.gamma * (rep.energy - energy_old));
  rep.min_norm = u_new.min_node_norm();
  rep.max_norm = u_new.max_node_norm();
  rep.fp_iters = iters;
  rep.q_negnorm = std::numeric_limits<double>::quiet_NaN();

  state.u = std::move(u_new);
  state.q.mesh = &mesh;
  state.q.components = 1;
  state.q.values = std::move(s_half);
  state.time = rep.time;
  return rep;
}

NodalField recover_multiplier(const NodalField& u, const SparseOperator& stiffness,
                              const SparseOperator& mass, double unit_tol) {
  const int nv = stiffness.rows;
  const int m = u.components;
  for (int a = 0; a < nv; ++a)
    if (std::abs(u.node_norm(a) - 1.0) > unit_tol)
      throw Error("recover_multiplier: field not nodally unit at vertex " +
                  std::to_string(a));
  std::vector<double> rhs(nv);
#pragma omp parallel for schedule(static)
  for (int a = 0; a < nv; ++a) {
    const auto cols = stiffness.row_cols(a);
    const auto vals = stiffness.row_vals(a);
    const double* ua = u.node(a);
    double s = 0.0;
    for (std::size_t p = 0; p < cols.size(); ++p) {
      const double* ub = u.node(cols[p]);
      double duv = 0.0;
      for (int c = 0; c < m; ++c) duv += ua[c] * ub[c];
      s += vals[p] * duv;
    }
    rhs[a] = -s;
  }
  NodalField q(*u.mesh, 1);
  q.values = solve_spd(mass, rhs);
  return q;
}

void write_step_csv_header(std::ostream& os) {
  os << "step,time,energy,dissipation,energy_residual,min_norm,max_norm,fp_iters,"
        "q_negnorm\n";
}

void write_step_csv_row(std::ostream& os, const StepReport& r) {
  os << r.step << ',' << format_double(r.time) << ',' << format_double(r.energy) << ','
     << format_double(r.dissipation) << ',' << format_double(r.energy_residual) << ','
     << format_double(r.min_norm) << ',' << format_double(r.max_norm) << ',' << r.fp_iters
     << ',' << format_double(r.q_negnorm) << '\n';
}

RunResult run_simulation(const Mesh& mesh, const Operators& ops, NodalField u0,
                         const SimulationSpec& spec) {
  spec.params.validate(mesh.dim);
  const int steps = spec.params.num_steps();

  RunResult out;
  out.state.u = std::move(u0);
  out.state.q.mesh = &mesh;
  out.state.q.components = 1;
  out.state.time = 0.0;

  SaddleSolver solver(spec.solver);
  std::optional<NegnormWorkspace> negnorm;
  if (spec.track_negnorm) {
    NegnormWorkspace ws(mesh, ops.stiffness);
    if (ws.valid()) negnorm.emplace(std::move(ws));
  }

  out.summary.initial_energy = dirichlet_energy(out.state.u, ops.stiffness);
  out.summary.final_energy = out.summary.initial_energy;

  if (spec.csv) {
    write_step_csv_header(*spec.csv);
    StepReport ic;
    ic.step = 0;
    ic.time = 0.0;
    ic.energy = out.summary.initial_energy;
    ic.min_norm = out.state.u.min_node_norm();
    ic.max_norm = out.state.u.max_node_norm();
    ic.q_negnorm = std::numeric_limits<double>::quiet_NaN();
    write_step_csv_row(*spec.csv, ic);
  }

  std::vector<double> mq;
  for (int n = 0; n < steps; ++n) {
    StepReport rep = spec.scheme == Scheme::euler
                         ? euler_step(out.state, spec.params, ops, solver)
                         : cn_step(out.state, spec.params, ops, solver, spec.cn);
    rep.step = n + 1;
    if (negnorm) {
      mq.resize(out.state.q.values.size());
      kernels::spmv(ops.mass, out.state.q.values, mq);
      rep.q_negnorm = negnorm->apply(mq);
    }
    out.summary.dissipation_total += rep.dissipation;
    out.summary.final_energy = rep.energy;
    out.summary.max_fp_iters = std::max(out.summary.max_fp_iters, rep.fp_iters);
    if (spec.csv) write_step_csv_row(*spec.csv, rep);
    out.trajectory.push_back(rep);
  }

  const double half_gamma = 0.5 * spec.params.gamma;
  const double scale = half_gamma * out.summary.initial_energy;
  out.summary.global_residual =
      std::abs(out.summary.dissipation_total +
               half_gamma * (out.summary.final_energy - out.summary.initial_energy)) /
      (scale > 0.0 ? scale : 1.0);
  return out;
}

}  // namespace spherefem
