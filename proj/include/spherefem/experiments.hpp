#pragma once

#include <iosfwd>
#include <map>

#include "spherefem/analysis.hpp"
#include "spherefem/schemes.hpp"

namespace spherefem {

enum class ExperimentKind { convergence_space, convergence_time, barrier_scan, dynamics };
enum class InitialCondition { smooth, singular };

// Flat key=value configuration with command-line overrides layered on top.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::convergence_space;
  Scheme scheme = Scheme::crank_nicolson;
  ModelParams model;
  SaddleOptions solver;
  CnOptions cn;

  int dim = 2;
  int nx = 0, ny = 0, nz = 0;
  Box box{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};
  DiagonalPattern pattern = DiagonalPattern::alternating;
  int phase = 0;

  InitialCondition ic = InitialCondition::smooth;
  double delta = 0.0625;

  int imin = 1, imax = 6;        // refinement index range (space study)
  int jmin = 0, jmax = 5;        // time-step index range (time study)
  int href_i = 3;                // mesh index for the time study
  double k_base = 0.1;           // time study uses k = k_base * 2^-j
  int jref = -1;                 // optional reference step index (errors vs k_ref)

  int barrier_levels = 3;
  double path_y = 0.0;
  double path_x_begin = -2.0, path_x_end = 0.0;
  int samples_per_cell = 8;

  int quad_degree = 4;
  bool track_negnorm = true;
  std::string out;

  void validate() const;
};

ExperimentConfig parse_config_file(const std::string& path);
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

struct ConvergenceRow {
  int level = 0;
  double h = 0.0;
  NormSet u_err;
  double q_negnorm = 0.0;
  NormSet q_err;
};

struct ConvergenceTable {
  std::vector<ConvergenceRow> rows;
  void write_csv(std::ostream& os) const;  // errors plus running rates
};

struct TimeStudyRow {
  int j = 0;
  double k = 0.0;
  double increment = 0.0;       // |u_k - u_{k/2}|_H1
  double err_vs_ref = 0.0;      // |u_k - u_ref|_H1 when a reference index is set
};

struct TimeStudyTable {
  std::vector<TimeStudyRow> rows;
  bool has_ref = false;
  void write_csv(std::ostream& os) const;
};

struct DynamicsResult {
  std::vector<StepReport> trajectory;
  RunSummary summary;
  double final_max_cell_energy = 0.0;
  double initial_max_cell_energy = 0.0;
};

ConvergenceTable run_convergence_space(const ExperimentConfig& cfg);
TimeStudyTable run_convergence_time(const ExperimentConfig& cfg);
std::vector<std::vector<BarrierSample>> run_barrier_scan(const ExperimentConfig& cfg);
void write_barrier_csv(std::ostream& os,
                       const std::vector<std::vector<BarrierSample>>& levels,
                       const ExperimentConfig& cfg);
DynamicsResult run_dynamics(const ExperimentConfig& cfg, std::ostream* csv);

Mesh build_mesh(const ExperimentConfig& cfg);
Mesh build_refinement_mesh(const ExperimentConfig& cfg, int level);

}  // namespace spherefem
