#include "cdyn/integrators.hpp"

#include <cmath>

#include "cdyn/log.hpp"

namespace cdyn::integrators {

namespace {

// Solve the saddle system [[M, G^T], [G, 0]] [x; y] = [r1; r2].
struct SaddleSolution {
  Vec primal;
  Vec dual;
};

SaddleSolution solve_saddle(const Mat& M, const Mat& G, const Vec& r1,
                            const Vec& r2) {
  const int n = static_cast<int>(M.rows());
  const int m = static_cast<int>(G.rows());
  Mat K = Mat::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = M;
  K.topRightCorner(n, m) = G.transpose();
  K.bottomLeftCorner(m, n) = G;
  Vec rhs(n + m);
  rhs.head(n) = r1;
  rhs.tail(m) = r2;
  Eigen::FullPivLU<Mat> lu(K);
  if (!lu.isInvertible())
    throw RankDeficiencyError(
        "saddle system is singular (redundant or degenerate constraints)");
  Vec sol = lu.solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

// Nonsymmetric saddle variant used by the half-explicit step, where the
// constraint row is evaluated at a different configuration than the column.
SaddleSolution solve_saddle2(const Mat& M, const Mat& Gcol, const Mat& Grow,
                             const Vec& r1, const Vec& r2) {
  const int n = static_cast<int>(M.rows());
  const int m = static_cast<int>(Grow.rows());
  Mat K = Mat::Zero(n + m, n + m);
  K.topLeftCorner(n, n) = M;
  K.topRightCorner(n, m) = Gcol.transpose();
  K.bottomLeftCorner(m, n) = Grow;
  Vec rhs(n + m);
  rhs.head(n) = r1;
  rhs.tail(m) = r2;
  Eigen::FullPivLU<Mat> lu(K);
  if (!lu.isInvertible())
    throw RankDeficiencyError(
        "half-explicit saddle system is singular");
  Vec sol = lu.solve(rhs);
  return {sol.head(n), sol.tail(m)};
}

// Shared core of the index-reduced steppers.  The Baumgarte terms vanish for
// alpha = beta = 0, which *is* the plain acceleration-level step.  When a
// constraint perturbation g(q) = delta(t) is injected, the twice
// differentiated constraint picks up delta'' (and the stabilization rows the
// lower derivatives).
SystemState index_reduced_step(const MechanicalSystem& sys,
                               const SystemState& state, double tau,
                               double alpha, double beta,
                               const ConstraintPerturbation* pert) {
  sys.validate();
  const Mat M = sys.mass(state.q);
  const Vec f = sys.force(state.q, state.v, state.t);

  Vec qdd;
  Vec lambda;
  if (sys.n_lambda > 0) {
    if (!sys.curvature)
      throw UnsupportedError(
          "index-reduced step: curvature callback required");
    const Mat G = sys.bilateral_jacobian(state.q);
    const Vec kappa = sys.curvature(state.q, state.v);
    const Vec g = sys.bilateral(state.q);
    const Vec gv = G * state.v;
    Vec rhs = -kappa - 2.0 * alpha * gv - (beta * beta) * g;
    if (pert) {
      rhs += pert->eval(sys.n_lambda, state.t, 2) +
             2.0 * alpha * pert->eval(sys.n_lambda, state.t, 1) +
             (beta * beta) * pert->eval(sys.n_lambda, state.t, 0);
    }
    auto sol = solve_saddle(M, G, f, rhs);
    qdd = sol.primal;
    lambda = sol.dual;
  } else {
    qdd = M.llt().solve(f);
    lambda = Vec();
  }

  SystemState next = state;
  next.t = state.t + tau;
  next.v = state.v + tau * qdd;       // semi-implicit Euler
  next.q = state.q + tau * next.v;
  next.lambda = lambda;
  return next;
}

}  // namespace

Vec ConstraintPerturbation::eval(int n_lambda, double t, int order) const {
  // delta(t) = eps sin(omega t); derivative ladder as for any sinusoid.
  double val = 0.0;
  switch (order) {
    case 0: val = eps * std::sin(omega * t); break;
    case 1: val = eps * omega * std::cos(omega * t); break;
    case 2: val = -eps * omega * omega * std::sin(omega * t); break;
    default:
      throw UnsupportedError("ConstraintPerturbation: order > 2 not used");
  }
  return Vec::Constant(n_lambda, val);
}

SystemState acceleration_level_step(const MechanicalSystem& sys,
                                    const SystemState& state, double tau,
                                    const ConstraintPerturbation* pert) {
  return index_reduced_step(sys, state, tau, 0.0, 0.0, pert);
}

SystemState baumgarte_step(const MechanicalSystem& sys,
                           const SystemState& state, double tau, double alpha,
                           double beta, const ConstraintPerturbation* pert) {
  return index_reduced_step(sys, state, tau, alpha, beta, pert);
}

SystemState ggl_step(const MechanicalSystem& sys, const SystemState& state,
                     double tau, const IntegratorConfig& cfg, StepStats* stats,
                     const ConstraintPerturbation* pert) {
  sys.validate();
  const int n = sys.n_q;
  const int m = sys.n_lambda;
  const double t1 = state.t + tau;

  // Unknown layout: xi = (q1, v1, lambda, mu).
  Vec q1 = state.q + tau * state.v;
  Vec v1 = state.v;
  Vec lam = (state.lambda.size() == m) ? state.lambda : Vec::Zero(m);
  Vec mu = Vec::Zero(m);

  const Vec delta = pert ? pert->eval(m, t1, 0) : Vec::Zero(m);
  const Vec delta_dot = pert ? pert->eval(m, t1, 1) : Vec::Zero(m);

  auto residual = [&](const Vec& q, const Vec& v, const Vec& l,
                      const Vec& u) -> Vec {
    const Mat G = sys.bilateral_jacobian(q);
    Vec R(2 * n + 2 * m);
    R.segment(0, n) = q - state.q - tau * (v - G.transpose() * u);
    R.segment(n, n) = sys.mass(q) * (v - state.v) -
                      tau * sys.force(q, v, t1) + tau * G.transpose() * l;
    R.segment(2 * n, m) = G * v - delta_dot;
    R.segment(2 * n + m, m) = sys.bilateral(q) - delta;
    return R;
  };

  Vec R = residual(q1, v1, lam, mu);
  double rnorm = R.cwiseAbs().maxCoeff();
  int iter = 0;
  for (; iter < cfg.newton_max_iter && rnorm > cfg.newton_tol; ++iter) {
    // Simplified Newton matrix: constraint Jacobian refreshed every
    // iteration, force and mass derivatives frozen (dropped).
    const Mat G = sys.bilateral_jacobian(q1);
    const Mat M = sys.mass(q1);
    Mat J = Mat::Zero(2 * n + 2 * m, 2 * n + 2 * m);
    J.block(0, 0, n, n) = Mat::Identity(n, n);
    J.block(0, n, n, n) = -tau * Mat::Identity(n, n);
    J.block(0, 2 * n + m, n, m) = tau * G.transpose();
    J.block(n, n, n, n) = M;
    J.block(n, 2 * n, n, m) = tau * G.transpose();
    J.block(2 * n, n, m, n) = G;
    J.block(2 * n + m, 0, m, n) = G;

    Eigen::FullPivLU<Mat> lu(J);
    if (!lu.isInvertible())
      throw RankDeficiencyError("ggl_step: singular iteration matrix");
    const Vec dx = lu.solve(-R);

    double step = 1.0;
    bool improved = false;
    for (int bt = 0; bt < 30; ++bt) {
      Vec q_try = q1 + step * dx.segment(0, n);
      Vec v_try = v1 + step * dx.segment(n, n);
      Vec l_try = lam + step * dx.segment(2 * n, m);
      Vec u_try = mu + step * dx.segment(2 * n + m, m);
      Vec R_try = residual(q_try, v_try, l_try, u_try);
      const double rn = R_try.cwiseAbs().maxCoeff();
      if (rn < rnorm || rn <= cfg.newton_tol) {
        q1 = q_try;
        v1 = v_try;
        lam = l_try;
        mu = u_try;
        R = R_try;
        rnorm = rn;
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved)
      throw StepFailure("ggl_step: damped Newton stalled", t1, rnorm);
  }
  if (rnorm > cfg.newton_tol)
    throw StepFailure("ggl_step: Newton did not converge", t1, rnorm);

  if (stats) {
    stats->newton_iterations = iter;
    stats->residual = rnorm;
    stats->mu = mu;
  }
  SystemState next = state;
  next.t = t1;
  next.q = q1;
  next.v = v1;
  next.lambda = lam;
  return next;
}

SystemState half_explicit_euler_step(const MechanicalSystem& sys,
                                     const SystemState& state, double tau) {
  sys.validate();
  const Vec q1 = state.q + tau * state.v;
  const Mat M = sys.mass(state.q);
  const Vec f = sys.force(state.q, state.v, state.t);
  SystemState next = state;
  next.t = state.t + tau;
  next.q = q1;
  if (sys.n_lambda > 0) {
    const Mat Gcol = sys.bilateral_jacobian(state.q);
    const Mat Grow = sys.bilateral_jacobian(q1);
    auto sol = solve_saddle2(M, Gcol, Grow, M * state.v + tau * f,
                             Vec::Zero(sys.n_lambda));
    next.v = sol.primal;
    next.lambda = sol.dual / tau;  // the saddle unknown is tau * lambda
  } else {
    next.v = state.v + tau * M.llt().solve(f);
  }
  return next;
}

PositionProjection project_position(const MechanicalSystem& sys,
                                    const Vec& q_raw, double tol,
                                    int max_iter) {
  sys.validate();
  if (sys.n_lambda == 0) return {q_raw, Vec()};
  Vec q = q_raw;
  Vec mu = Vec::Zero(sys.n_lambda);
  for (int iter = 0; iter < max_iter; ++iter) {
    const Mat M = sys.mass(q);
    const Mat G = sys.bilateral_jacobian(q);
    Vec r1 = M * (q - q_raw) + G.transpose() * mu;
    Vec r2 = sys.bilateral(q);
    const double rnorm =
        std::max(r1.cwiseAbs().maxCoeff(), r2.cwiseAbs().maxCoeff());
    if (rnorm <= tol) return {q, mu};
    auto sol = solve_saddle(M, G, -r1, -r2);
    q += sol.primal;
    mu += sol.dual;
  }
  throw ProjectionFailure("project_position: Newton did not converge");
}

VelocityProjection project_velocity(const MechanicalSystem& sys, const Vec& q,
                                    const Vec& v_raw) {
  sys.validate();
  if (sys.n_lambda == 0) return {v_raw, Vec()};
  const Mat M = sys.mass(q);
  const Mat G = sys.bilateral_jacobian(q);
  auto sol = solve_saddle(M, G, M * v_raw, Vec::Zero(sys.n_lambda));
  return {sol.primal, sol.dual};
}

ShakeResult shake_step(const MechanicalSystem& sys, const Vec& q_prev,
                       const Vec& q_curr, double tau, double tol,
                       int max_iter) {
  sys.validate();
  const Mat M = sys.mass(q_curr);
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success)
    throw RankDeficiencyError("shake_step: mass matrix not SPD");
  // Conservative force -grad U evaluated at rest (v = 0).
  const Vec f = sys.force(q_curr, Vec::Zero(sys.n_q), 0.0);
  const Vec q_free = 2.0 * q_curr - q_prev + tau * tau * llt.solve(f);
  const Mat Gc_t = sys.bilateral_jacobian(q_curr).transpose();
  const Mat MinvGt = llt.solve(Gc_t);

  Vec lambda = Vec::Zero(sys.n_lambda);
  Vec q_next = q_free;
  for (int iter = 0; iter < max_iter; ++iter) {
    q_next = q_free - tau * tau * (MinvGt * lambda);
    const Vec phi = sys.bilateral(q_next);
    if (phi.cwiseAbs().maxCoeff() <= tol) return {q_next, lambda};
    const Mat Gn = sys.bilateral_jacobian(q_next);
    Mat dphi = -tau * tau * (Gn * MinvGt);
    Eigen::FullPivLU<Mat> lu(dphi);
    if (!lu.isInvertible())
      throw RankDeficiencyError("shake_step: singular constraint system");
    lambda += lu.solve(-phi);
  }
  throw StepFailure("shake_step: Newton on the constraint did not converge",
                    0.0, sys.bilateral(q_next).cwiseAbs().maxCoeff());
}

Vec shake_bootstrap_prev(const MechanicalSystem& sys, const Vec& q0,
                         const Vec& v0, double tau) {
  SystemState s;
  s.t = 0.0;
  s.q = q0;
  s.v = v0;
  // One acceleration-level solve for q''(q0, v0), then a backward Taylor
  // half-step projected onto the manifold.
  const Mat M = sys.mass(q0);
  const Vec f = sys.force(q0, v0, 0.0);
  Vec qdd;
  if (sys.n_lambda > 0) {
    const Mat G = sys.bilateral_jacobian(q0);
    const Vec kappa = sys.curvature ? sys.curvature(q0, v0)
                                    : Vec::Zero(sys.n_lambda);
    auto sol = solve_saddle(M, G, f, -kappa);
    qdd = sol.primal;
  } else {
    qdd = M.llt().solve(f);
  }
  const Vec raw = q0 - tau * v0 + 0.5 * tau * tau * qdd;
  return project_position(sys, raw).q;
}

std::vector<SystemState> integrate_smooth(
    const MechanicalSystem& sys, const SystemState& state0, SmoothKind kind,
    const IntegratorConfig& cfg, double t_end,
    const std::function<void(const SystemState&, const StepStats&)>& observer,
    const ConstraintPerturbation* pert) {
  if (!(cfg.dt > 0.0)) throw DimensionError("integrate_smooth: dt <= 0");
  const int n_steps =
      static_cast<int>(std::llround((t_end - state0.t) / cfg.dt));
  std::vector<SystemState> states;
  states.reserve(n_steps + 1);
  states.push_back(state0);

  if (pert && kind != SmoothKind::acceleration_level &&
      kind != SmoothKind::baumgarte && kind != SmoothKind::ggl)
    throw UnsupportedError(
        "integrate_smooth: constraint perturbation only supported for the "
        "acceleration-level, Baumgarte and GGL formulations");

  Vec q_prev;  // SHAKE history
  if (kind == SmoothKind::shake)
    q_prev = shake_bootstrap_prev(sys, state0.q, state0.v, cfg.dt);

  const double t0 = state0.t;
  for (int i = 1; i <= n_steps; ++i) {
    const SystemState& cur = states.back();
    StepStats stats;
    SystemState next;
    switch (kind) {
      case SmoothKind::acceleration_level:
        next = acceleration_level_step(sys, cur, cfg.dt, pert);
        break;
      case SmoothKind::baumgarte:
        next = baumgarte_step(sys, cur, cfg.dt, cfg.baumgarte_alpha,
                              cfg.baumgarte_beta, pert);
        break;
      case SmoothKind::ggl:
        next = ggl_step(sys, cur, cfg.dt, cfg, &stats, pert);
        break;
      case SmoothKind::half_explicit:
        next = half_explicit_euler_step(sys, cur, cfg.dt);
        break;
      case SmoothKind::half_explicit_projected: {
        next = half_explicit_euler_step(sys, cur, cfg.dt);
        auto pp = project_position(sys, next.q, cfg.newton_tol,
                                   cfg.newton_max_iter);
        next.q = pp.q;
        auto pv = project_velocity(sys, next.q, next.v);
        next.v = pv.v;
        break;
      }
      case SmoothKind::shake: {
        auto r = shake_step(sys, q_prev, cur.q, cfg.dt, cfg.newton_tol,
                            cfg.newton_max_iter);
        next = cur;
        next.q = r.q_next;
        next.v = (r.q_next - cur.q) / cfg.dt;  // backward difference
        next.lambda = r.lambda;
        q_prev = cur.q;
        break;
      }
    }
    next.t = t0 + cfg.dt * i;  // avoid accumulated rounding in t
    states.push_back(next);
    if (observer) observer(states.back(), stats);
  }
  return states;
}

std::vector<ProbePoint> perturbation_probe(SmoothKind kind,
                                           const MechanicalSystem& sys,
                                           const SystemState& state0,
                                           double eps,
                                           const std::vector<double>& omegas,
                                           double horizon,
                                           const IntegratorConfig& cfg) {
  if (kind != SmoothKind::acceleration_level && kind != SmoothKind::baumgarte &&
      kind != SmoothKind::ggl)
    throw UnsupportedError(
        "perturbation_probe: formulation must be acceleration-level, "
        "Baumgarte, or GGL");
  const double t_end = state0.t + horizon;
  const auto base = integrate_smooth(sys, state0, kind, cfg, t_end);
  std::vector<ProbePoint> out;
  out.reserve(omegas.size());
  for (double omega : omegas) {
    ConstraintPerturbation pert{eps, omega};
    const auto run =
        integrate_smooth(sys, state0, kind, cfg, t_end, nullptr, &pert);
    double dev = 0.0;
    const size_t n = std::min(base.size(), run.size());
    for (size_t i = 0; i < n; ++i)
      dev = std::max(dev,
                     (run[i].q - base[i].q).cwiseAbs().maxCoeff());
    out.push_back({omega, dev});
    log_info("probe omega=%g deviation=%g", omega, dev);
  }
  return out;
}

double loglog_slope(const std::vector<ProbePoint>& points) {
  if (points.size() < 2)
    throw DimensionError("loglog_slope: need at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(points.size());
  for (const auto& p : points) {
    if (!(p.omega > 0.0) || !(p.deviation > 0.0))
      throw AnalysisError("loglog_slope: nonpositive probe data");
    const double x = std::log(p.omega);
    const double y = std::log(p.deviation);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace cdyn::integrators
