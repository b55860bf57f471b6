#include "cdyn/nonsmooth.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <Eigen/Cholesky>

#include "cdyn/log.hpp"
#include "cdyn/parallel.hpp"

namespace cdyn::nonsmooth {

void NonsmoothConfig::validate() const {
  if (!(h > 0.0)) throw UnsupportedError("nonsmooth config: h must be > 0");
  if (!(theta >= 0.0 && theta <= 1.0))
    throw UnsupportedError("nonsmooth config: theta must lie in [0, 1]");
  if (!(restitution >= 0.0 && restitution <= 1.0))
    throw UnsupportedError(
        "nonsmooth config: restitution must lie in [0, 1]");
  if (!(candidate_gap >= 0.0))
    throw UnsupportedError("nonsmooth config: candidate_gap must be >= 0");
  if (!(activation_tol >= 0.0))
    throw UnsupportedError("nonsmooth config: activation_tol must be >= 0");
}

std::vector<int> active_set(const MechanicalSystem& sys, const Vec& q,
                            double tol) {
  if (sys.n_u == 0) return {};
  const std::vector<int> ids = candidate_contacts(sys, q, tol);
  if (ids.empty()) return {};
  Vec gaps;
  Mat jac;
  unilateral_subset(sys, q, ids, gaps, jac);
  std::vector<int> out;
  out.reserve(ids.size());
  for (size_t s = 0; s < ids.size(); ++s)
    if (gaps(static_cast<Eigen::Index>(s)) <= tol) out.push_back(ids[s]);
  return out;
}

namespace {

// Column indices of the structurally nonzero entries of each Jacobian row;
// the Delassus fill only touches these (an empty list means a full row scan).
std::vector<std::vector<int>> row_supports(const Mat& G) {
  std::vector<std::vector<int>> supports(static_cast<size_t>(G.rows()));
  for (Eigen::Index i = 0; i < G.rows(); ++i) {
    auto& sup = supports[static_cast<size_t>(i)];
    for (Eigen::Index c = 0; c < G.cols(); ++c)
      if (G(i, c) != 0.0) sup.push_back(static_cast<int>(c));
  }
  return supports;
}

Eigen::LLT<Mat> factor_mass(const MechanicalSystem& sys, const Vec& q) {
  Eigen::LLT<Mat> llt(sys.mass(q));
  if (llt.info() != Eigen::Success)
    throw RankDeficiencyError("mass matrix is not positive definite");
  return llt;
}

bool strictly_diagonal(const Mat& M) {
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j)
      if (i != j && M(i, j) != 0.0) return false;
  return true;
}

}  // namespace

AssembledStep assemble_contact_problem(const MechanicalSystem& sys,
                                       const SystemState& state,
                                       const std::vector<int>& contacts,
                                       const NonsmoothConfig& cfg) {
  const int nu_rows = static_cast<int>(contacts.size());
  const int nb = sys.n_lambda;
  const int m = nu_rows + nb;
  const Eigen::Index n = sys.n_q;

  // Diagonal mass matrices (particle systems) skip the dense factorization;
  // the result is identical, M^-1 just applies componentwise.
  const Mat M = sys.mass(state.q);
  Vec minv_diag;
  Eigen::LLT<Mat> llt;
  if (strictly_diagonal(M)) {
    if ((M.diagonal().array() <= 0.0).any())
      throw RankDeficiencyError("mass matrix is not positive definite");
    minv_diag = M.diagonal().cwiseInverse();
  } else {
    llt.compute(M);
    if (llt.info() != Eigen::Success)
      throw RankDeficiencyError("mass matrix is not positive definite");
  }

  AssembledStep out;
  if (cfg.theta_force) {
    const Vec q_pred = state.q + (cfg.theta * cfg.h) * state.v;
    out.k = cfg.h * sys.force(q_pred, state.v, state.t + cfg.theta * cfg.h);
  } else {
    out.k = cfg.h * sys.force(state.q, state.v, state.t);
  }
  out.v_free =
      state.v + cfg.theta * (minv_diag.size() ? Vec(minv_diag.cwiseProduct(out.k))
                                              : Vec(llt.solve(out.k)));

  out.G = Mat::Zero(m, n);
  Vec gaps(nu_rows);
  if (nu_rows > 0) {
    Mat jac;
    unilateral_subset(sys, state.q, contacts, gaps, jac);
    out.G.topRows(nu_rows) = jac;
  }
  if (nb > 0) out.G.bottomRows(nb) = sys.bilateral_jacobian(state.q);

  out.minv_gt = minv_diag.size()
                    ? Mat(minv_diag.asDiagonal() * out.G.transpose())
                    : Mat(llt.solve(out.G.transpose()));

  out.problem.A.resize(m, m);
  par::delassus_fill_parallel(out.G, out.minv_gt, cfg.theta, row_supports(out.G),
                              out.problem.A);

  out.problem.b.resize(m);
  out.problem.equality.assign(static_cast<size_t>(m), 0);
  out.problem.index_map.assign(static_cast<size_t>(m), -1);
  for (int s = 0; s < nu_rows; ++s) {
    double rhs = out.G.row(s).dot(out.v_free);
    if (cfg.mode == ConstraintMode::linearized) rhs += gaps(s) / cfg.h;
    if (cfg.restitution != 0.0)
      rhs += cfg.restitution * out.G.row(s).dot(state.v);
    out.problem.b(s) = rhs;
    out.problem.index_map[static_cast<size_t>(s)] = contacts[static_cast<size_t>(s)];
  }
  for (int r = 0; r < nb; ++r) {
    out.problem.b(nu_rows + r) = out.G.row(nu_rows + r).dot(out.v_free);
    out.problem.equality[static_cast<size_t>(nu_rows + r)] = 1;
  }
  out.problem.validate();
  return out;
}

namespace {

lcp::LcpSolution solve_contact(const AssembledStep& asmb,
                               const SystemState& state,
                               const NonsmoothConfig& cfg, const Vec& warm) {
  switch (cfg.solver) {
    case lcp::LcpSolverKind::pgj:
      return lcp::pgj_solve(asmb.problem, cfg.solver_cfg, &warm);
    case lcp::LcpSolverKind::pgs:
      return lcp::pgs_solve(asmb.problem, cfg.solver_cfg, &warm);
    case lcp::LcpSolverKind::psor:
      return lcp::psor_solve(asmb.problem, cfg.solver_cfg, &warm);
    case lcp::LcpSolverKind::augmented_lagrangian: {
      // Physical split: impulses map to the end-of-step velocity, which maps
      // to the Theta-averaged constraint velocity plus the constant row
      // terms, so the composition reproduces A p + b.
      lcp::AlContext ctx;
      ctx.m = asmb.problem.size();
      ctx.equality = asmb.problem.equality;
      ctx.suggested_r = lcp::default_projection_step(asmb.problem.A);
      const Vec minv_k = (asmb.v_free - state.v) / cfg.theta;
      const Vec v_old = state.v;
      const double theta = cfg.theta;
      Vec extras = asmb.problem.b - asmb.G * asmb.v_free;
      const Mat& G = asmb.G;
      const Mat& minv_gt = asmb.minv_gt;
      ctx.velocity = [&, minv_k](const Vec& p) -> Vec {
        return v_old + minv_k + minv_gt * p;
      };
      ctx.constraint_velocity = [&, extras, theta](const Vec& w) -> Vec {
        return G * (theta * w + (1.0 - theta) * v_old) + extras;
      };
      return lcp::augmented_lagrangian_solve(ctx, cfg.solver_cfg, &warm);
    }
  }
  throw UnsupportedError("unknown contact solver kind");
}

}  // namespace

SystemState moreau_jean_step(const MechanicalSystem& sys,
                             const SystemState& state,
                             const NonsmoothConfig& cfg,
                             NonsmoothStepStats* stats,
                             const Vec* impulse_warm_start) {
  cfg.validate();
  std::vector<int> contacts;
  if (sys.n_u > 0)
    contacts = cfg.mode == ConstraintMode::active_set
                   ? active_set(sys, state.q, cfg.activation_tol)
                   : candidate_contacts(sys, state.q, cfg.candidate_gap);

  const auto asmb = assemble_contact_problem(sys, state, contacts, cfg);
  const int m = asmb.problem.size();
  const int nu_rows = static_cast<int>(contacts.size());

  Vec p = Vec::Zero(m);
  NonsmoothStepStats st;
  st.active_rows = m;
  if (m > 0) {
    if (!(cfg.theta > 0.0))
      throw UnsupportedError(
          "moreau_jean_step: theta must be positive when constraint rows are "
          "present");
    Vec warm = Vec::Zero(m);
    if (cfg.warm_start) {
      if (impulse_warm_start && impulse_warm_start->size() == sys.n_u)
        for (int s = 0; s < nu_rows; ++s)
          warm(s) = std::max(0.0, (*impulse_warm_start)(contacts[static_cast<size_t>(s)]));
      if (state.lambda.size() == sys.n_lambda)
        for (int r = 0; r < sys.n_lambda; ++r)
          warm(nu_rows + r) = -cfg.h * state.lambda(r);
    }
    const auto sol = solve_contact(asmb, state, cfg, warm);
    if (!sol.converged)
      throw StepFailure("contact solver did not converge", state.t,
                        sol.residual);
    p = sol.p;
    st.iterations = sol.iterations;
    st.residual = sol.residual;
  }

  SystemState next;
  next.t = state.t + cfg.h;
  Vec minv_k;
  if (cfg.theta > 0.0) {
    minv_k = (asmb.v_free - state.v) / cfg.theta;
  } else {
    minv_k = factor_mass(sys, state.q).solve(asmb.k);
  }
  next.v = state.v + minv_k;
  if (m > 0) next.v += asmb.minv_gt * p;
  next.q = state.q + cfg.h * (cfg.theta * next.v + (1.0 - cfg.theta) * state.v);

  next.p = Vec::Zero(sys.n_u);
  for (int s = 0; s < nu_rows; ++s) next.p(contacts[static_cast<size_t>(s)]) = p(s);
  next.lambda = -p.tail(sys.n_lambda) / cfg.h;

  if (stats) *stats = st;
  return next;
}

std::vector<SystemState> simulate(
    const MechanicalSystem& sys, const SystemState& state0,
    const NonsmoothConfig& cfg, double t_end,
    const std::function<void(const SystemState&, const NonsmoothStepStats&)>&
        observer) {
  sys.validate();
  cfg.validate();
  const int n_steps =
      static_cast<int>(std::llround((t_end - state0.t) / cfg.h));
  std::vector<SystemState> states;
  states.reserve(static_cast<size_t>(n_steps) + 1);

  SystemState start = state0;
  if (start.lambda.size() != sys.n_lambda)
    start.lambda = Vec::Zero(sys.n_lambda);
  if (start.p.size() != sys.n_u) start.p = Vec::Zero(sys.n_u);
  states.push_back(std::move(start));

  const double t0 = state0.t;
  for (int i = 1; i <= n_steps; ++i) {
    const SystemState& cur = states.back();
    NonsmoothStepStats stats;
    SystemState next =
        moreau_jean_step(sys, cur, cfg, &stats, cfg.warm_start ? &cur.p : nullptr);
    next.t = t0 + cfg.h * i;
    if (observer) observer(next, stats);
    states.push_back(std::move(next));
  }
  log_debug("nonsmooth simulate: %d steps done", n_steps);
  return states;
}

}  // namespace cdyn::nonsmooth
