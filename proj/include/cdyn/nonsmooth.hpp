// Event-capturing time stepping for mechanical systems with unilateral
// contacts: Theta-scheme on (q, v), impulse-level contact handling through a
// complementarity problem over the active (or all candidate) contact rows,
// optional bilateral constraints as equality rows, optional Newton
// restitution.  One step never subdivides: impacts are captured by the fixed
// grid.
#pragma once

#include <functional>
#include <vector>

#include "cdyn/lcp.hpp"
#include "cdyn/mechanical_system.hpp"

namespace cdyn::nonsmooth {

enum class ConstraintMode {
  linearized,  // rows g/h + G(theta v_{k+1} + (1-theta) v_k), all candidates
  active_set,  // rows G(theta v_{k+1} + (1-theta) v_k), gaps <= tol only
};

struct NonsmoothConfig {
  double h = 1e-3;       // step size
  double theta = 1.0;    // Theta-method blend in [0, 1]
  ConstraintMode mode = ConstraintMode::linearized;
  lcp::LcpSolverKind solver = lcp::LcpSolverKind::pgs;
  lcp::LcpSolverConfig solver_cfg;
  double activation_tol = 0.0;  // active-set gap threshold
  double restitution = 0.0;     // Newton restitution coefficient e in [0, 1]
  // Candidate cutoff handed to the broadphase in linearized mode; rows whose
  // gap exceeds the cutoff cannot become active within a step and are left
  // out of the problem (their multiplier is provably zero).
  double candidate_gap = 0.5;
  bool warm_start = true;  // reuse the previous impulse as the solver start
  // Evaluate the force integral at the Theta-shifted predictor position
  // q + theta h v instead of q (exact for constant and linear-in-q forces).
  bool theta_force = false;

  void validate() const;
};

// Ascending ids of unilateral constraints with gap <= tol.
std::vector<int> active_set(const MechanicalSystem& sys, const Vec& q,
                            double tol);

// Contact problem of one step: A = theta * G M^-1 G^T over the selected rows
// (bilateral rows appended as equality rows), b = [gap/h +] G v_free with
// v_free = v + theta M^-1 k and the restitution shift e*(G_s v) on unilateral
// rows.  index_map maps problem rows to unilateral ids (-1 for bilateral
// rows).  Extras needed by the step are returned alongside.
struct AssembledStep {
  lcp::ContactProblem problem;
  Mat G;        // rows of the problem (unilateral then bilateral)
  Vec k;        // force integral h*f
  Vec v_free;   // v + theta M^-1 k
  Mat minv_gt;  // M^-1 G^T (n_q x m)
};

AssembledStep assemble_contact_problem(const MechanicalSystem& sys,
                                       const SystemState& state,
                                       const std::vector<int>& contacts,
                                       const NonsmoothConfig& cfg);

// Per-step diagnostics of the complementarity solve.
struct NonsmoothStepStats {
  int iterations = 0;
  double residual = 0.0;
  int active_rows = 0;
};

// One Theta-step: v_{k+1} = v_k + M^-1 (k + G^T p), q_{k+1} = q_k +
// h (theta v_{k+1} + (1-theta) v_k); p solves the contact problem (p = 0
// when no rows are selected).  Solver non-convergence raises StepFailure.
SystemState moreau_jean_step(const MechanicalSystem& sys,
                             const SystemState& state,
                             const NonsmoothConfig& cfg,
                             NonsmoothStepStats* stats = nullptr,
                             const Vec* impulse_warm_start = nullptr);

// Fixed-grid driver; the observer sees every accepted state.
std::vector<SystemState> simulate(
    const MechanicalSystem& sys, const SystemState& state0,
    const NonsmoothConfig& cfg, double t_end,
    const std::function<void(const SystemState&, const NonsmoothStepStats&)>&
        observer = nullptr);

}  // namespace cdyn::nonsmooth
