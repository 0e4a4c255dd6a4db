#pragma once

#include <optional>

#include "spherefem/assembly.hpp"
#include "spherefem/linsolve.hpp"

namespace spherefem {

struct ModelParams {
  double gamma = 1.0;   // exchange/relaxation coefficient, > 0
  double alpha = 0.0;   // gyromagnetic coupling, >= 0; must be 0 in 2D
  double k = 1e-3;      // time step
  double T = 1.0;       // final time, an integer multiple of k

  int num_steps() const;
  void validate(int dim) const;
};

// Operators shared by every step on one mesh.
struct Operators {
  SparseOperator stiffness;
  SparseOperator mass;
  LumpedMass lumped;
  static Operators assemble(const Mesh& mesh);
};

struct StepReport {
  int step = 0;
  double time = 0.0;
  double energy = 0.0;                 // |grad u|^2
  double dissipation = 0.0;            // this step's contribution to the energy balance
  double energy_residual = 0.0;        // defect of the per-step energy identity
  double min_norm = 0.0, max_norm = 0.0;
  int fp_iters = 0;                    // nonlinear iterations (0 for the Euler scheme)
  double q_negnorm = 0.0;              // dual-norm surrogate of the multiplier (NaN if unset)
};

struct StepState {
  NodalField u;
  NodalField q;       // last computed multiplier (half-step values for CN)
  double time = 0.0;
};

// Nodal interpolation followed by nodal normalization; every nodal norm of
// the result is 1 up to roundoff.
NodalField prepare_initial(const PointFn& u0, const Mesh& mesh);

// One step of the linearly implicit Euler scheme. The multiplier couples
// through the normalized previous directions; the constraint rows enforce
// u^n_a . (u^{n+1}_a - u^n_a) = 0 nodewise, so nodal norms never decrease.
StepReport euler_step(StepState& state, const ModelParams& params, const Operators& ops,
                      SaddleSolver& solver);

struct CnOptions {
  double fp_tol = 1e-13;   // relative increment threshold in the lumped norm
  int fp_maxiter = 100;
  bool renormalize = false;  // renormalize u^n before each step instead of
                             // carrying the constraint-violation correction
};

// One step of the Crank-Nicolson scheme, solved by fixed-point iteration on
// the half-step unknowns. Requires alpha = 0. The multiplier is reported at
// the half time level.
StepReport cn_step(StepState& state, const ModelParams& params, const Operators& ops,
                   SaddleSolver& solver, const CnOptions& cn = {});

// Multiplier consistent with a nodally unit field: solves
// mass * q = -contract(stiffness, u) where contract_a = sum_b (u_a.u_b) K_ab.
// This is the discrete counterpart of -|grad u|^2.
NodalField recover_multiplier(const NodalField& u, const SparseOperator& stiffness,
                              const SparseOperator& mass, double unit_tol = 1e-8);

enum class Scheme { euler, crank_nicolson };

struct SimulationSpec {
  Scheme scheme = Scheme::crank_nicolson;
  ModelParams params;
  SaddleOptions solver;
  CnOptions cn;
  bool track_negnorm = true;     // per-step dual norm of the multiplier
  std::ostream* csv = nullptr;   // per-step log sink (optional)
};

struct RunSummary {
  double initial_energy = 0.0;      // |grad u0|^2
  double final_energy = 0.0;
  double dissipation_total = 0.0;
  double global_residual = 0.0;     // energy-balance defect relative to (gamma/2)|grad u0|^2
  int max_fp_iters = 0;
};

struct RunResult {
  std::vector<StepReport> trajectory;
  RunSummary summary;
  StepState state;  // final state
};

// Runs N = T/k steps from the given initial field, accumulating the global
// energy balance and optionally streaming the per-step CSV log.
RunResult run_simulation(const Mesh& mesh, const Operators& ops, NodalField u0,
                         const SimulationSpec& spec);

void write_step_csv_header(std::ostream& os);
void write_step_csv_row(std::ostream& os, const StepReport& r);

}  // namespace spherefem
