// Solvers for the linear complementarity problem u = Ap + b, p >= 0, u >= 0,
// p.u = 0: projected Gauss-Jacobi / Gauss-Seidel / SOR sweeps, an
// augmented-Lagrangian fixed-point loop that never forms A explicitly, and a
// brute-force active-set enumeration oracle for small problems.
//
// Problems may mark individual rows as equality rows (bilateral constraints
// appended to a contact problem): those rows solve u_i = 0 with a sign-free
// multiplier and are exempt from the nonnegative projection.
#pragma once

#include <functional>
#include <vector>

#include "cdyn/errors.hpp"
#include "cdyn/types.hpp"

namespace cdyn::lcp {

struct ContactProblem {
  Mat A;                                // m x m Delassus-type matrix
  Vec b;                                // length m
  std::vector<int> index_map;           // row -> constraint id (optional)
  std::vector<unsigned char> equality;  // row mask, 1 = equality row (optional)

  int size() const { return static_cast<int>(A.rows()); }
  bool is_equality(int i) const {
    return !equality.empty() && equality[static_cast<size_t>(i)] != 0;
  }
  // Throws DimensionError on shape mismatches.
  void validate() const;
};

struct LcpSolverConfig {
  double tol = 1e-10;
  int max_iter = 10000;
  double r = 0.0;      // projection step factor; 0 selects 1/norm_inf(A)
  double alpha = 1.0;  // SOR relaxation, in (0, 2)
};

struct LcpSolution {
  Vec p;               // multiplier/impulse, >= 0 on complementarity rows
  Vec u;               // = A p + b
  int iterations = 0;  // sweeps performed (0 if the start was already solved)
  double residual = 0.0;
  bool converged = false;
};

enum class LcpSolverKind { pgj, pgs, psor, augmented_lagrangian };

// max(norm_inf(min(p,0)), norm_inf(min(u,0)), |p.u|) over complementarity
// rows, plus norm_inf(u) over equality rows.
double complementarity_residual(const ContactProblem& problem, const Vec& p,
                                const Vec& u);

// norm_inf of p - proj(p - r u), the projection skipped on equality rows.
double natural_map_residual(const ContactProblem& problem, const Vec& p,
                            const Vec& u, double r);

// True iff p = proj_{R+}(p - r u) componentwise to 1e-12 (pure
// complementarity form; r must be positive).
bool fixed_point_check(const Vec& p, const Vec& u, double r);

LcpSolution pgj_solve(const ContactProblem& problem, const LcpSolverConfig& cfg,
                      const Vec* warm_start = nullptr);
LcpSolution pgs_solve(const ContactProblem& problem, const LcpSolverConfig& cfg,
                      const Vec* warm_start = nullptr);
LcpSolution psor_solve(const ContactProblem& problem,
                       const LcpSolverConfig& cfg,
                       const Vec* warm_start = nullptr);

// Matrix-free engine for the augmented-Lagrangian loop: step (1) maps the
// multiplier to a generalized velocity, step (2) maps that velocity to the
// constraint velocity u (including all constant terms, so that
// constraint_velocity(velocity(p)) == A p + b).
struct AlContext {
  std::function<Vec(const Vec&)> velocity;
  std::function<Vec(const Vec&)> constraint_velocity;
  int m = 0;
  double suggested_r = 1.0;             // used when cfg.r == 0
  std::vector<unsigned char> equality;  // row mask (optional)
};

// Builds the algebraic context for an explicit problem (velocity == A p).
AlContext make_al_context(const ContactProblem& problem);

LcpSolution augmented_lagrangian_solve(const AlContext& ctx,
                                       const LcpSolverConfig& cfg,
                                       const Vec* warm_start = nullptr);

// Active-set enumeration oracle (2^m subsets, m <= 12 -> CapacityError
// beyond).  Equality rows are members of every candidate set.  Returns the
// minimal-objective (p.Ap + p.b) accepted candidate; ties broken by the
// lexicographically smallest active set.  Throws AnalysisError when no
// candidate is accepted.
LcpSolution enumerate_solve(const ContactProblem& problem);

// Smallest r-independent choice used by the sweeps when cfg.r == 0.
double default_projection_step(const Mat& A);

}  // namespace cdyn::lcp
