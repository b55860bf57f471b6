// Constrained mechanical system in first-kind form:
//
//   M(q) q'' = f(q, v, t) - G(q)^T lambda        (dynamics)
//        0   = g(q)                              (bilateral constraints)
//        0  <= g_u(q)                            (unilateral gaps)
//
// with G = dg/dq of shape n_lambda x n_q and G_u = dg_u/dq of shape
// n_u x n_q.  Everything is supplied through callbacks so scenarios stay
// independent of the integrators; callbacks must be pure functions of their
// arguments (no hidden mutable state) so systems can be shared read-only.
#pragma once

#include <functional>
#include <vector>

#include "cdyn/types.hpp"

namespace cdyn {

struct MechanicalSystem {
  int n_q = 0;
  int n_lambda = 0;
  int n_u = 0;

  std::function<Mat(const Vec& q)> mass;
  std::function<Vec(const Vec& q, const Vec& v, double t)> force;

  // Bilateral constraints; required when n_lambda > 0.
  std::function<Vec(const Vec& q)> bilateral;
  std::function<Mat(const Vec& q)> bilateral_jacobian;
  // kappa(q, v) = (dG/dq)(v, v): the velocity-quadratic term in
  // d^2/dt^2 g(q) = G(q) q'' + kappa(q, v).  Required by the
  // acceleration-level steppers.
  std::function<Vec(const Vec& q, const Vec& v)> curvature;

  // Unilateral gap functions; required when n_u > 0.
  std::function<Vec(const Vec& q)> unilateral;
  std::function<Mat(const Vec& q)> unilateral_jacobian;

  // Optional potential energy; enables the total-energy diagnostic.
  std::function<double(const Vec& q)> potential;

  // Optional broadphase: ids (ascending) of every unilateral constraint whose
  // gap at q may be <= cutoff.  Must be conservative (no false negatives).
  // When absent all of 0..n_u-1 are candidates.
  std::function<std::vector<int>(const Vec& q, double cutoff)>
      contact_candidates;

  // Optional row-wise gap evaluation for large systems; when absent the dense
  // callbacks above are used.  unilateral_rows(q, ids) returns the gaps and
  // Jacobian rows restricted to ids, in the given order.
  std::function<void(const Vec& q, const std::vector<int>& ids, Vec& gaps,
                     Mat& jac)>
      unilateral_rows;

  // Throws DimensionError / UnsupportedError when the setup is inconsistent.
  void validate() const;
};

// Residuals of the bilateral constraints at the two lowest derivative levels.
struct ConstraintResiduals {
  Vec g;         // position level, size n_lambda
  Vec gv;        // velocity level G(q) v, size n_lambda
  double g_inf = 0.0;
  double gv_inf = 0.0;
};

double kinetic_energy(const MechanicalSystem& sys, const SystemState& state);

// T + U; throws UnsupportedError when the system declares no potential.
double total_energy(const MechanicalSystem& sys, const SystemState& state);

ConstraintResiduals constraint_residuals(const MechanicalSystem& sys,
                                         const SystemState& state);

// Gaps and Jacobian rows for a subset of unilateral constraints, going
// through unilateral_rows when available and the dense callbacks otherwise.
void unilateral_subset(const MechanicalSystem& sys, const Vec& q,
                       const std::vector<int>& ids, Vec& gaps, Mat& jac);

// Candidate unilateral ids at the given cutoff (broadphase when available,
// otherwise all ids).
std::vector<int> candidate_contacts(const MechanicalSystem& sys, const Vec& q,
                                    double cutoff);

}  // namespace cdyn
