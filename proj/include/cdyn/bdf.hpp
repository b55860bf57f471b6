// Fully implicit DAEs  F(x', x, t) = 0  discretized by BDF formulas of order
// k in {1, 2}: the derivative is replaced by the backward difference
//
//   x'(t_{n+k}) ~ (1/tau) sum_i alpha_i x_{n+i}
//
// and the resulting nonlinear system in x_{n+k} is solved by a damped Newton
// iteration.
#pragma once

#include <functional>
#include <vector>

#include "cdyn/types.hpp"

namespace cdyn::dae {

struct ImplicitDae {
  int n = 0;
  std::function<Vec(const Vec& xdot, const Vec& x, double t)> residual;
  // Optional analytic Jacobians; forward differences are used when absent.
  std::function<Mat(const Vec& xdot, const Vec& x, double t)> jac_xdot;
  std::function<Mat(const Vec& xdot, const Vec& x, double t)> jac_x;
};

struct NewtonOptions {
  double tol = 1e-10;       // ||F||_inf acceptance threshold
  int max_iter = 50;
  int max_backtrack = 30;   // step-halving budget per iteration
};

// One BDF-k step.  history holds the last k states ordered oldest..newest at
// uniform spacing tau; t_next = t(newest) + tau.  Returns x_{n+k}.
Vec bdf_step(const ImplicitDae& dae, const std::vector<Vec>& history,
             double tau, double t_next, int k,
             const NewtonOptions& opts = {});

// Uniform-grid BDF-k integration from x0 at t0; lower-order startup steps
// fill the history (BDF-1 bootstraps BDF-2).  Returns states at every grid
// point including x0.
std::vector<Vec> integrate_bdf(const ImplicitDae& dae, const Vec& x0,
                               double t0, double tau, int n_steps, int k,
                               const NewtonOptions& opts = {});

// View of a linear constant-coefficient DAE as an implicit one
// (F = E x' + H x - c(t)); what BDF needs to run on assembled circuits.
ImplicitDae wrap_linear(const Mat& E, const Mat& H,
                        const std::function<Vec(double)>& rhs);

}  // namespace cdyn::dae
