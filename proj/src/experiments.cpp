#include "spherefem/experiments.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "spherefem/csv.hpp"
#include "spherefem/kernels.hpp"

namespace spherefem {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error("config: invalid number '" + v + "' for key '" + key + "'");
  }
}

int to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw Error("config: invalid integer '" + v + "' for key '" + key + "'");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw Error("config: invalid boolean '" + v + "' for key '" + key + "'");
}

std::vector<double> to_doubles(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item), key));
  return out;
}

}  // namespace

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "experiment") {
    if (value == "convergence-space") cfg.experiment = ExperimentKind::convergence_space;
    else if (value == "convergence-time") cfg.experiment = ExperimentKind::convergence_time;
    else if (value == "barrier-scan") cfg.experiment = ExperimentKind::barrier_scan;
    else if (value == "dynamics") cfg.experiment = ExperimentKind::dynamics;
    else throw Error("config: unknown experiment '" + value + "'");
  } else if (key == "scheme") {
    if (value == "euler") cfg.scheme = Scheme::euler;
    else if (value == "crank-nicolson") cfg.scheme = Scheme::crank_nicolson;
    else throw Error("config: unknown scheme '" + value + "'");
  } else if (key == "solver") {
    if (value == "direct") cfg.solver.method = SaddleMethod::direct;
    else if (value == "uzawa") cfg.solver.method = SaddleMethod::uzawa;
    else throw Error("config: unknown solver '" + value + "'");
  } else if (key == "gamma") cfg.model.gamma = to_double(value, key);
  else if (key == "alpha") cfg.model.alpha = to_double(value, key);
  else if (key == "k") cfg.model.k = to_double(value, key);
  else if (key == "T") cfg.model.T = to_double(value, key);
  else if (key == "dim") cfg.dim = to_int(value, key);
  else if (key == "nx") cfg.nx = to_int(value, key);
  else if (key == "ny") cfg.ny = to_int(value, key);
  else if (key == "nz") cfg.nz = to_int(value, key);
  else if (key == "box") {
    const auto v = to_doubles(value, key);
    if (v.size() != 4 && v.size() != 6) throw Error("config: box needs 4 or 6 numbers");
    for (std::size_t d = 0; d < v.size() / 2; ++d) {
      cfg.box.lo[d] = v[2 * d];
      cfg.box.hi[d] = v[2 * d + 1];
    }
  } else if (key == "pattern") {
    if (value == "alternating") cfg.pattern = DiagonalPattern::alternating;
    else if (value == "uniform") cfg.pattern = DiagonalPattern::uniform;
    else throw Error("config: unknown pattern '" + value + "'");
  } else if (key == "phase") cfg.phase = to_int(value, key);
  else if (key == "ic") {
    if (value == "smooth") cfg.ic = InitialCondition::smooth;
    else if (value == "singular") cfg.ic = InitialCondition::singular;
    else throw Error("config: unknown ic '" + value + "'");
  } else if (key == "delta") cfg.delta = to_double(value, key);
  else if (key == "imin") cfg.imin = to_int(value, key);
  else if (key == "imax") cfg.imax = to_int(value, key);
  else if (key == "jmin") cfg.jmin = to_int(value, key);
  else if (key == "jmax") cfg.jmax = to_int(value, key);
  else if (key == "href_i") cfg.href_i = to_int(value, key);
  else if (key == "k_base") cfg.k_base = to_double(value, key);
  else if (key == "jref") cfg.jref = to_int(value, key);
  else if (key == "barrier_levels") cfg.barrier_levels = to_int(value, key);
  else if (key == "path_y") cfg.path_y = to_double(value, key);
  else if (key == "path_x_begin") cfg.path_x_begin = to_double(value, key);
  else if (key == "path_x_end") cfg.path_x_end = to_double(value, key);
  else if (key == "samples_per_cell") cfg.samples_per_cell = to_int(value, key);
  else if (key == "quad_degree" || key == "quad_order") cfg.quad_degree = to_int(value, key);
  else if (key == "fp_tol") cfg.cn.fp_tol = to_double(value, key);
  else if (key == "fp_maxiter") cfg.cn.fp_maxiter = to_int(value, key);
  else if (key == "renormalize") cfg.cn.renormalize = to_bool(value, key);
  else if (key == "solver_tol") cfg.solver.tol = to_double(value, key);
  else if (key == "track_negnorm") cfg.track_negnorm = to_bool(value, key);
  else if (key == "out") cfg.out = value;
  else throw Error("config: unknown key '" + key + "'");
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("config: cannot open '" + path + "'");
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error("config: line " + std::to_string(lineno) + " is not key=value");
    apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void ExperimentConfig::validate() const {
  if (dim != 2 && dim != 3) throw Error("config: dim must be 2 or 3");
  model.validate(dim);
  if (scheme == Scheme::crank_nicolson && model.alpha != 0.0)
    throw Error("config: the Crank-Nicolson scheme requires alpha = 0");
  if (experiment == ExperimentKind::convergence_space && imin > imax)
    throw Error("config: empty refinement range");
  if (experiment == ExperimentKind::convergence_time && jmin > jmax)
    throw Error("config: empty time-step range");
  if (experiment == ExperimentKind::dynamics && (nx < 1 || ny < 1 || (dim == 3 && nz < 1)))
    throw Error("config: dynamics needs explicit grid divisions");
  if (quad_degree < 1) throw Error("config: quad_degree must be >= 1");
}

Mesh build_mesh(const ExperimentConfig& cfg) {
  if (cfg.dim == 2) return build_structured_2d(cfg.nx, cfg.ny, cfg.box, cfg.pattern, cfg.phase);
  return build_structured_3d(cfg.nx, cfg.ny, cfg.nz, cfg.box);
}

Mesh build_refinement_mesh(const ExperimentConfig& cfg, int level) {
  // square grids on (-1,1)^2 with spacing 2^-level
  const int n = 1 << (level + 1);
  Box box{{-1.0, -1.0, 0.0}, {1.0, 1.0, 0.0}};
  return build_structured_2d(n, n, box, cfg.pattern, cfg.phase);
}

namespace {

RunResult run_smooth_problem(const Mesh& mesh, const Operators& ops,
                             const ExperimentConfig& cfg, double k) {
  SmoothTestProblem problem;
  problem.gamma = cfg.model.gamma;
  NodalField u0 = prepare_initial(problem.u_fn(0.0), mesh);
  SimulationSpec spec;
  spec.scheme = cfg.scheme;
  spec.params = cfg.model;
  spec.params.k = k;
  spec.solver = cfg.solver;
  spec.cn = cfg.cn;
  spec.track_negnorm = false;
  return run_simulation(mesh, ops, std::move(u0), spec);
}

}  // namespace

ConvergenceTable run_convergence_space(const ExperimentConfig& cfg) {
  if (cfg.ic != InitialCondition::smooth)
    throw Error("convergence-space: smooth initial data required");
  ConvergenceTable table;
  SmoothTestProblem problem;
  problem.gamma = cfg.model.gamma;
  for (int level = cfg.imin; level <= cfg.imax; ++level) {
    Mesh mesh = build_refinement_mesh(cfg, level);
    Operators ops = Operators::assemble(mesh);
    RunResult run = run_smooth_problem(mesh, ops, cfg, cfg.model.k);
    ConvergenceRow row;
    row.level = level;
    row.h = std::pow(2.0, -level);
    row.u_err = error_norms_u(run.state.u, problem, cfg.model.T, cfg.quad_degree);
    const double t_half = cfg.model.T - 0.5 * cfg.model.k;
    if (cfg.scheme == Scheme::crank_nicolson) {
      row.q_negnorm = negnorm_q(run.state.q, problem, t_half, ops.stiffness, ops.mass,
                                cfg.quad_degree);
      row.q_err = error_norms_q(run.state.q, problem, t_half, cfg.quad_degree);
    } else {
      row.q_negnorm =
          negnorm_q(run.state.q, problem, cfg.model.T, ops.stiffness, ops.mass,
                    cfg.quad_degree);
      row.q_err = error_norms_q(run.state.q, problem, cfg.model.T, cfg.quad_degree);
    }
    table.rows.push_back(row);
  }
  return table;
}

void ConvergenceTable::write_csv(std::ostream& os) const {
  os << "i,h,u_l1,u_l1_rate,u_l2,u_l2_rate,u_linf,u_linf_rate,u_h1,u_h1_rate,"
        "q_negnorm,q_negnorm_rate,q_l1,q_l2,q_linf,q_h1\n";
  auto rate = [&](auto get, std::size_t r) -> std::string {
    if (r == 0) return "";
    const double e0 = get(rows[r - 1]);
    const double e1 = get(rows[r]);
    if (!(e0 > 0.0) || !(e1 > 0.0)) return "";
    return format_double(std::log2(e0 / e1));
  };
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    os << row.level << ',' << format_double(row.h) << ',' << format_double(row.u_err.l1)
       << ',' << rate([](const ConvergenceRow& x) { return x.u_err.l1; }, r) << ','
       << format_double(row.u_err.l2) << ','
       << rate([](const ConvergenceRow& x) { return x.u_err.l2; }, r) << ','
       << format_double(row.u_err.linf) << ','
       << rate([](const ConvergenceRow& x) { return x.u_err.linf; }, r) << ','
       << format_double(row.u_err.h1) << ','
       << rate([](const ConvergenceRow& x) { return x.u_err.h1; }, r) << ','
       << format_double(row.q_negnorm) << ','
       << rate([](const ConvergenceRow& x) { return x.q_negnorm; }, r) << ','
       << format_double(row.q_err.l1) << ',' << format_double(row.q_err.l2) << ','
       << format_double(row.q_err.linf) << ',' << format_double(row.q_err.h1) << '\n';
  }
}

TimeStudyTable run_convergence_time(const ExperimentConfig& cfg) {
  if (cfg.ic != InitialCondition::smooth)
    throw Error("convergence-time: smooth initial data required");
  Mesh mesh = build_refinement_mesh(cfg, cfg.href_i);
  Operators ops = Operators::assemble(mesh);

  // solutions at T for k = k_base * 2^-j, j = jmin .. jmax+1
  std::vector<NodalField> solutions;
  for (int j = cfg.jmin; j <= cfg.jmax + 1; ++j) {
    const double k = cfg.k_base * std::pow(2.0, -j);
    solutions.push_back(run_smooth_problem(mesh, ops, cfg, k).state.u);
  }
  std::optional<NodalField> ref;
  if (cfg.jref >= 0) {
    if (cfg.jref <= cfg.jmax + 1)
      throw Error("convergence-time: jref must exceed jmax+1");
    const double k = cfg.k_base * std::pow(2.0, -cfg.jref);
    ref = run_smooth_problem(mesh, ops, cfg, k).state.u;
  }

  TimeStudyTable table;
  table.has_ref = ref.has_value();
  for (int j = cfg.jmin; j <= cfg.jmax; ++j) {
    const std::size_t idx = static_cast<std::size_t>(j - cfg.jmin);
    TimeStudyRow row;
    row.j = j;
    row.k = cfg.k_base * std::pow(2.0, -j);
    NodalField d(mesh, mesh.dim);
    kernels::scale_add(1.0, solutions[idx].values, -1.0, solutions[idx + 1].values,
                       d.values);
    row.increment = h1_norm(d, ops.stiffness, ops.mass);
    if (ref) {
      kernels::scale_add(1.0, solutions[idx].values, -1.0, ref->values, d.values);
      row.err_vs_ref = h1_norm(d, ops.stiffness, ops.mass);
    }
    table.rows.push_back(row);
  }
  return table;
}

void TimeStudyTable::write_csv(std::ostream& os) const {
  os << "j,k,u_h1_increment,rate" << (has_ref ? ",u_h1_err_vs_ref" : "") << "\n";
  for (std::size_t r = 0; r < rows.size(); ++r) {
    os << rows[r].j << ',' << format_double(rows[r].k) << ','
       << format_double(rows[r].increment) << ',';
    if (r > 0 && rows[r].increment > 0.0 && rows[r - 1].increment > 0.0)
      os << format_double(std::log2(rows[r - 1].increment / rows[r].increment));
    if (has_ref) os << ',' << format_double(rows[r].err_vs_ref);
    os << '\n';
  }
}

std::vector<std::vector<BarrierSample>> run_barrier_scan(const ExperimentConfig& cfg) {
  if (cfg.dim != 2) throw Error("barrier-scan: 2D grids only");
  std::vector<std::vector<BarrierSample>> levels;
  int nx = cfg.nx > 0 ? cfg.nx : 34;
  int ny = cfg.ny > 0 ? cfg.ny : 17;
  for (int l = 0; l < cfg.barrier_levels; ++l) {
    Mesh mesh = build_structured_2d(nx, ny, cfg.box, cfg.pattern, cfg.phase);
    SparseOperator K = assemble_stiffness(mesh);
    const double step = mesh.spacing[0] / cfg.samples_per_cell;
    std::vector<Vec3> path;
    for (double x = cfg.path_x_begin; x <= cfg.path_x_end + 0.5 * step; x += step)
      path.push_back({std::min(x, cfg.path_x_end), cfg.path_y, 0.0});
    levels.push_back(barrier_scan(mesh, K, path));
    // refinement pattern 34x17 -> 66x33 -> 130x65: ny stays odd, so the scan
    // line y = 0 remains a row of cell centers and never meets a vertex
    nx = 2 * nx - 2;
    ny = 2 * ny - 1;
  }
  return levels;
}

void write_barrier_csv(std::ostream& os,
                       const std::vector<std::vector<BarrierSample>>& levels,
                       const ExperimentConfig& cfg) {
  os << "level,x0,y0,energy,skipped\n";
  for (std::size_t l = 0; l < levels.size(); ++l)
    for (const auto& s : levels[l]) {
      os << l << ',' << format_double(s.x0[0]) << ',' << format_double(s.x0[1]) << ','
         << format_double(s.energy) << ',' << (s.skipped ? 1 : 0) << '\n';
    }
  (void)cfg;
}

DynamicsResult run_dynamics(const ExperimentConfig& cfg, std::ostream* csv) {
  if (cfg.ic != InitialCondition::singular)
    throw Error("dynamics: singular initial data required");
  Mesh mesh = build_mesh(cfg);
  Operators ops = Operators::assemble(mesh);
  SingularIC ic{cfg.delta, cfg.dim};
  NodalField u0 = prepare_initial(ic.fn(), mesh);

  DynamicsResult result;
  result.initial_max_cell_energy = max_cell_energy(u0, mesh);

  SimulationSpec spec;
  spec.scheme = cfg.scheme;
  spec.params = cfg.model;
  spec.solver = cfg.solver;
  spec.cn = cfg.cn;
  spec.track_negnorm = cfg.track_negnorm;
  spec.csv = csv;
  RunResult run = run_simulation(mesh, ops, std::move(u0), spec);
  result.trajectory = std::move(run.trajectory);
  result.summary = run.summary;
  result.final_max_cell_energy = max_cell_energy(run.state.u, mesh);
  return result;
}

}  // namespace spherefem
