// Time steppers for constrained mechanical systems, spanning the standard
// reformulation ladder:
//
//   * acceleration-level (index-reduced) stepping with semi-implicit Euler,
//     optionally Baumgarte-stabilized,
//   * the enlarged (GGL-style) position+velocity formulation under implicit
//     Euler,
//   * half-explicit Euler,
//   * position/velocity projection onto the constraint manifold,
//   * SHAKE (position Verlet with constrained positions),
//
// plus a perturbation probe that injects a harmonic violation into the
// constraint equations and measures the trajectory's sensitivity.
#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "cdyn/mechanical_system.hpp"
#include "cdyn/types.hpp"

namespace cdyn::integrators {

struct IntegratorConfig {
  double dt = 1e-3;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double baumgarte_alpha = 0.0;
  double baumgarte_beta = 0.0;
};

// Harmonic perturbation delta(t) = eps * sin(omega t) applied to the
// position-level constraint equation g(q) = delta(t).  Each stepper consumes
// the derivative orders its own constraint level needs (delta, delta',
// delta'').
struct ConstraintPerturbation {
  double eps = 0.0;
  double omega = 0.0;
  Vec eval(int n_lambda, double t, int order) const;
};

// Diagnostics a stepper can report back.
struct StepStats {
  int newton_iterations = 0;
  double residual = 0.0;
  Vec mu;  // GGL auxiliary multiplier of the accepted step (if applicable)
};

// Index-reduced stepping: solve the saddle system
//   [ M  G^T ] [q''    ]   [ f     ]
//   [ G   0  ] [lambda ] = [ -kappa]
// then advance with semi-implicit Euler (v += tau q''; q += tau v).
SystemState acceleration_level_step(
    const MechanicalSystem& sys, const SystemState& state, double tau,
    const ConstraintPerturbation* pert = nullptr);

// Same saddle system with the stabilized right-hand side
//   -kappa - 2 alpha G v - beta^2 g.
SystemState baumgarte_step(const MechanicalSystem& sys,
                           const SystemState& state, double tau, double alpha,
                           double beta,
                           const ConstraintPerturbation* pert = nullptr);

// Implicit Euler on the enlarged system
//   q1 = q + tau (v1 - G(q1)^T mu)
//   M v1 = M v + tau f(q1, v1, t1) - tau G(q1)^T lambda
//   0 = G(q1) v1,   0 = g(q1)
// solved by simplified Newton (constraint Jacobians refreshed every
// iteration, force derivatives frozen).  mu vanishes along exact solutions
// and is reported through stats.
SystemState ggl_step(const MechanicalSystem& sys, const SystemState& state,
                     double tau, const IntegratorConfig& cfg,
                     StepStats* stats = nullptr,
                     const ConstraintPerturbation* pert = nullptr);

// Half-explicit Euler: explicit position update q1 = q + tau v, then the
// linear saddle system with constraint row evaluated at q1
//   [ M(q)   G(q)^T ] [v1      ]   [ M v + tau f(q, v, t) ]
//   [ G(q1)  0      ] [tau*lam ] = [ 0                    ]
SystemState half_explicit_euler_step(const MechanicalSystem& sys,
                                     const SystemState& state, double tau);

// Nearest-point projection onto g = 0 in the M-metric:
//   0 = M(q~)(q~ - q) + G(q~)^T mu,  0 = g(q~).
struct PositionProjection {
  Vec q;
  Vec mu;
};
PositionProjection project_position(const MechanicalSystem& sys,
                                    const Vec& q_raw, double tol = 1e-10,
                                    int max_iter = 50);

// Velocity projection onto the tangent space G(q) v = 0 (one linear solve):
//   0 = M(v~ - v) + G^T eta,  0 = G v~.
struct VelocityProjection {
  Vec v;
  Vec eta;
};
VelocityProjection project_velocity(const MechanicalSystem& sys, const Vec& q,
                                    const Vec& v_raw);

// SHAKE step for M q'' = -grad U(q) - G^T lambda: position Verlet with the
// new position constrained to the manifold,
//   q2 - 2 q1 + q0 = -tau^2 M^{-1} (grad U(q1) + G(q1)^T lambda),
//   0 = g(q2),
// solved by Newton in lambda.  The force callback is evaluated with v = 0
// to obtain -grad U.
struct ShakeResult {
  Vec q_next;
  Vec lambda;  // force units
};
ShakeResult shake_step(const MechanicalSystem& sys, const Vec& q_prev,
                       const Vec& q_curr, double tau, double tol = 1e-10,
                       int max_iter = 50);

// Constrained backward half-step used to seed SHAKE from (q0, v0):
// q_{-1} = projection of q0 - tau v0 + tau^2/2 q''(q0, v0).
Vec shake_bootstrap_prev(const MechanicalSystem& sys, const Vec& q0,
                         const Vec& v0, double tau);

enum class SmoothKind { acceleration_level, baumgarte, ggl, half_explicit,
                        half_explicit_projected, shake };

// Uniform-grid driver; observer (if given) is called after every accepted
// step.  half_explicit_projected appends position+velocity projection to
// every half-explicit step.
std::vector<SystemState> integrate_smooth(
    const MechanicalSystem& sys, const SystemState& state0, SmoothKind kind,
    const IntegratorConfig& cfg, double t_end,
    const std::function<void(const SystemState&, const StepStats&)>& observer =
        nullptr,
    const ConstraintPerturbation* pert = nullptr);

// Deviation of the perturbed trajectory from the unperturbed one, in the
// position max-norm over the horizon, for each probe frequency.
struct ProbePoint {
  double omega = 0.0;
  double deviation = 0.0;
};
std::vector<ProbePoint> perturbation_probe(SmoothKind kind,
                                           const MechanicalSystem& sys,
                                           const SystemState& state0,
                                           double eps,
                                           const std::vector<double>& omegas,
                                           double horizon,
                                           const IntegratorConfig& cfg);

// Least-squares slope of log(deviation) against log(omega).
double loglog_slope(const std::vector<ProbePoint>& points);

}  // namespace cdyn::integrators
