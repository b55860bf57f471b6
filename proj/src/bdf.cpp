#include "cdyn/bdf.hpp"

#include <cmath>

#include "cdyn/log.hpp"

namespace cdyn::dae {

namespace {

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x,
                const Vec& f0) {
  const Eigen::Index n = x.size();
  Mat J(f0.size(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double eps = 1e-8 * (1.0 + std::abs(x(j)));
    Vec xp = x;
    xp(j) += eps;
    J.col(j) = (f(xp) - f0) / eps;
  }
  return J;
}

}  // namespace

Vec bdf_step(const ImplicitDae& dae, const std::vector<Vec>& history,
             double tau, double t_next, int k, const NewtonOptions& opts) {
  if (k != 1 && k != 2)
    throw UnsupportedError("bdf_step: only k = 1, 2 are supported");
  if (static_cast<int>(history.size()) != k)
    throw DimensionError("bdf_step: history must hold exactly k states");
  if (!(tau > 0.0)) throw DimensionError("bdf_step: tau must be positive");
  if (!dae.residual) throw UnsupportedError("bdf_step: residual missing");

  // rho(x_new) = lead * x_new + past; xdot = rho / tau.
  // BDF-1: x_{n+1} - x_n.  BDF-2: 3/2 x_{n+2} - 2 x_{n+1} + 1/2 x_n.
  const double lead = (k == 1) ? 1.0 : 1.5;
  Vec past;
  Vec x;  // predictor
  if (k == 1) {
    past = -history[0];
    x = history[0];
  } else {
    past = -2.0 * history[1] + 0.5 * history[0];
    x = 2.0 * history[1] - history[0];  // linear extrapolation
  }

  auto residual_at = [&](const Vec& xi) {
    const Vec xdot = (lead * xi + past) / tau;
    return dae.residual(xdot, xi, t_next);
  };

  Vec F = residual_at(x);
  double fnorm = F.cwiseAbs().maxCoeff();
  for (int iter = 0; iter < opts.max_iter; ++iter) {
    if (fnorm <= opts.tol) return x;
    const Vec xdot = (lead * x + past) / tau;
    Mat J;
    if (dae.jac_xdot && dae.jac_x) {
      J = (lead / tau) * dae.jac_xdot(xdot, x, t_next) +
          dae.jac_x(xdot, x, t_next);
    } else {
      J = fd_jacobian(residual_at, x, F);
    }
    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible())
      throw RankDeficiencyError("bdf_step: singular Newton matrix");
    const Vec dx = lu.solve(-F);

    // Damped update: halve until the residual norm actually drops.
    double step = 1.0;
    bool improved = false;
    for (int bt = 0; bt <= opts.max_backtrack; ++bt) {
      Vec x_try = x + step * dx;
      Vec F_try = residual_at(x_try);
      const double fn_try = F_try.cwiseAbs().maxCoeff();
      if (fn_try < fnorm || fn_try <= opts.tol) {
        x = x_try;
        F = F_try;
        fnorm = fn_try;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved)
      throw StepFailure("bdf_step: damped Newton stalled", t_next, fnorm);
  }
  if (fnorm <= opts.tol) return x;
  throw StepFailure("bdf_step: Newton did not converge", t_next, fnorm);
}

std::vector<Vec> integrate_bdf(const ImplicitDae& dae, const Vec& x0,
                               double t0, double tau, int n_steps, int k,
                               const NewtonOptions& opts) {
  if (n_steps < 0) throw DimensionError("integrate_bdf: negative step count");
  std::vector<Vec> xs;
  xs.reserve(n_steps + 1);
  xs.push_back(x0);
  for (int i = 0; i < n_steps; ++i) {
    const double t_next = t0 + tau * (i + 1);
    const int k_eff = std::min(k, static_cast<int>(xs.size()));
    std::vector<Vec> hist(xs.end() - k_eff, xs.end());
    xs.push_back(bdf_step(dae, hist, tau, t_next, k_eff, opts));
  }
  return xs;
}

ImplicitDae wrap_linear(const Mat& E, const Mat& H,
                        const std::function<Vec(double)>& rhs) {
  if (E.rows() != E.cols() || H.rows() != H.cols() || E.rows() != H.rows())
    throw DimensionError("wrap_linear: E and H must be square, equal size");
  ImplicitDae dae;
  dae.n = static_cast<int>(E.rows());
  dae.residual = [E, H, rhs](const Vec& xdot, const Vec& x, double t) {
    return Vec(E * xdot + H * x - rhs(t));
  };
  dae.jac_xdot = [E](const Vec&, const Vec&, double) { return E; };
  dae.jac_x = [H](const Vec&, const Vec&, double) { return H; };
  return dae;
}

}  // namespace cdyn::dae
