// Trajectory recording and CSV output.  One row per recorded state with the
// fixed column set
//
//   t, q_0.., v_0.., lambda_0.., p_0.., g_inf, gv_inf, min_gap, e_kin,
//   e_tot, iters, comp_res
//
// printed with "%.17g" so runs with identical inputs produce byte-identical
// files.  Missing diagnostics use IEEE specials: min_gap is +inf for systems
// without unilateral constraints, e_tot is NaN when no potential is declared.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "cdyn/mechanical_system.hpp"

namespace cdyn::traj {

struct TrajectoryRow {
  double t = 0.0;
  Vec q;
  Vec v;
  Vec lambda;
  Vec p;
  double g_inf = 0.0;   // bilateral position residual, inf-norm
  double gv_inf = 0.0;  // bilateral velocity residual, inf-norm
  double min_gap = 0.0;
  double e_kin = 0.0;
  double e_tot = 0.0;
  int iters = 0;
  double comp_res = 0.0;
};

// Evaluates every diagnostic column for one state.  iters/comp_res come from
// the stepper that produced the state (0 for the initial row).
TrajectoryRow make_row(const MechanicalSystem& sys, const SystemState& state,
                       int iters = 0, double comp_res = 0.0);

// Collects rows with an optional stride: step index 0 always recorded, then
// every stride-th step, then the final step regardless of phase.
class Recorder {
 public:
  explicit Recorder(const MechanicalSystem& sys, int stride = 1);

  // Feed every accepted state in order; 'last' marks the final state so the
  // stride never drops it.
  void push(const SystemState& state, int iters, double comp_res,
            bool last = false);

  const std::vector<TrajectoryRow>& rows() const { return rows_; }

 private:
  const MechanicalSystem& sys_;
  int stride_;
  long index_ = 0;
  std::vector<TrajectoryRow> rows_;
};

// Column names for the given dimensions, comma-joined.
std::string csv_header(int n_q, int n_lambda, int n_u);

void write_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows,
               int n_q, int n_lambda, int n_u);

// Convenience wrapper; throws IoError when the file cannot be opened.
void write_csv_file(const std::string& path,
                    const std::vector<TrajectoryRow>& rows, int n_q,
                    int n_lambda, int n_u);

}  // namespace cdyn::traj
