#include "cdyn/lcp.hpp"

#include <algorithm>
#include <cmath>

#include "cdyn/parallel.hpp"

namespace cdyn::lcp {

namespace {

// Convergence requires both the complementarity and the natural-map residual
// below tol (the natural map alone underestimates stalls for small r, the
// complementarity residual alone misses negative p excursions mid-sweep).
bool accepted(const ContactProblem& prob, const Vec& p, const Vec& u, double r,
              double tol, double* residual_out) {
  const double comp = complementarity_residual(prob, p, u);
  const double nat = natural_map_residual(prob, p, u, r);
  if (residual_out) *residual_out = comp;
  return comp <= tol && nat <= tol;
}

double pick_r(const ContactProblem& prob, const LcpSolverConfig& cfg) {
  if (cfg.r > 0.0) return cfg.r;
  return default_projection_step(prob.A);
}

Vec start_point(const ContactProblem& prob, const Vec* warm_start) {
  if (!warm_start) return Vec::Zero(prob.size());
  if (warm_start->size() != prob.size())
    throw DimensionError("lcp warm start has wrong length");
  return *warm_start;
}

LcpSolution finish(const ContactProblem& prob, Vec p, int iterations,
                   double residual, bool converged) {
  LcpSolution sol;
  sol.u = prob.A * p + prob.b;
  sol.p = std::move(p);
  sol.iterations = iterations;
  sol.residual = residual;
  sol.converged = converged;
  return sol;
}

// Gauss-Seidel / SOR sweep shared by pgs_solve and psor_solve.  The target
// p~ is the unprojected exact row solve; the relaxed value alpha*p~ +
// (1-alpha)*p is projected afterwards (classical projected SOR), which keeps
// p >= 0 for any relaxation.  alpha == 1 skips the blend entirely so both
// entry points share a bitwise-identical iterate sequence.  Rows with a
// vanishing diagonal fall back to the global-r projected-gradient update.
void sweep_in_place(const ContactProblem& prob, double r, double alpha,
                    Vec& p) {
  const int m = prob.size();
  for (int i = 0; i < m; ++i) {
    const double u_i = prob.A.row(i).dot(p) + prob.b(i);
    double target;
    if (prob.A(i, i) > 0.0)
      target = p(i) - u_i / prob.A(i, i);
    else
      target = p(i) - r * u_i;
    double p_new =
        (alpha == 1.0) ? target : alpha * target + (1.0 - alpha) * p(i);
    if (!prob.is_equality(i)) p_new = std::max(0.0, p_new);
    p(i) = p_new;
  }
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 2.0))
    throw UnsupportedError("SOR relaxation must lie in (0, 2)");
}

}  // namespace

void ContactProblem::validate() const {
  if (A.rows() != A.cols()) throw DimensionError("contact matrix not square");
  if (b.size() != A.rows())
    throw DimensionError("contact vector length does not match the matrix");
  const auto m = static_cast<size_t>(A.rows());
  if (!equality.empty() && equality.size() != m)
    throw DimensionError("equality mask length does not match the problem");
  if (!index_map.empty() && index_map.size() != m)
    throw DimensionError("index map length does not match the problem");
}

double default_projection_step(const Mat& A) {
  double norm_inf = 0.0;
  for (int i = 0; i < A.rows(); ++i)
    norm_inf = std::max(norm_inf, A.row(i).cwiseAbs().sum());
  return norm_inf > 0.0 ? 1.0 / norm_inf : 1.0;
}

double complementarity_residual(const ContactProblem& problem, const Vec& p,
                                const Vec& u) {
  double res = 0.0;
  double pu = 0.0;
  for (int i = 0; i < problem.size(); ++i) {
    if (problem.is_equality(i)) {
      res = std::max(res, std::abs(u(i)));
      continue;
    }
    res = std::max(res, std::max(-p(i), 0.0));
    res = std::max(res, std::max(-u(i), 0.0));
    pu += p(i) * u(i);
  }
  return std::max(res, std::abs(pu));
}

double natural_map_residual(const ContactProblem& problem, const Vec& p,
                            const Vec& u, double r) {
  double res = 0.0;
  for (int i = 0; i < problem.size(); ++i) {
    const double step = p(i) - r * u(i);
    const double target = problem.is_equality(i) ? step : std::max(0.0, step);
    res = std::max(res, std::abs(p(i) - target));
  }
  return res;
}

bool fixed_point_check(const Vec& p, const Vec& u, double r) {
  if (!(r > 0.0))
    throw UnsupportedError("fixed_point_check requires r > 0");
  if (p.size() != u.size())
    throw DimensionError("fixed_point_check: length mismatch");
  for (int i = 0; i < p.size(); ++i) {
    const double proj = std::max(0.0, p(i) - r * u(i));
    if (std::abs(p(i) - proj) > 1e-12) return false;
  }
  return true;
}

LcpSolution pgj_solve(const ContactProblem& problem, const LcpSolverConfig& cfg,
                      const Vec* warm_start) {
  problem.validate();
  const double r = pick_r(problem, cfg);
  Vec p = start_point(problem, warm_start);
  Vec u = problem.A * p + problem.b;
  double residual = 0.0;
  if (accepted(problem, p, u, r, cfg.tol, &residual))
    return finish(problem, std::move(p), 0, residual, true);

  Vec p_next(problem.size());
  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    par::pgj_sweep_parallel(problem.A, problem.b, problem.equality, r, p,
                            p_next);
    p.swap(p_next);
    u = problem.A * p + problem.b;
    if (accepted(problem, p, u, r, cfg.tol, &residual))
      return finish(problem, std::move(p), iter, residual, true);
  }
  return finish(problem, std::move(p), cfg.max_iter, residual, false);
}

LcpSolution psor_solve(const ContactProblem& problem,
                       const LcpSolverConfig& cfg, const Vec* warm_start) {
  problem.validate();
  check_alpha(cfg.alpha);
  const double r = pick_r(problem, cfg);
  Vec p = start_point(problem, warm_start);
  Vec u = problem.A * p + problem.b;
  double residual = 0.0;
  if (accepted(problem, p, u, r, cfg.tol, &residual))
    return finish(problem, std::move(p), 0, residual, true);

  for (int iter = 1; iter <= cfg.max_iter; ++iter) {
    sweep_in_place(problem, r, cfg.alpha, p);
    u = problem.A * p + problem.b;
    if (accepted(problem, p, u, r, cfg.tol, &residual))
      return finish(problem, std::move(p), iter, residual, true);
  }
  return finish(problem, std::move(p), cfg.max_iter, residual, false);
}

LcpSolution pgs_solve(const ContactProblem& problem, const LcpSolverConfig& cfg,
                      const Vec* warm_start) {
  LcpSolverConfig plain = cfg;
  plain.alpha = 1.0;
  return psor_solve(problem, plain, warm_start);
}

AlContext make_al_context(const ContactProblem& problem) {
  problem.validate();
  AlContext ctx;
  ctx.m = problem.size();
  ctx.suggested_r = default_projection_step(problem.A);
  ctx.equality = problem.equality;
  // The "velocity" of the algebraic context is simply the image A p; the
  // constant part b plays the role of the free-motion constraint velocity.
  Mat A = problem.A;
  Vec b = problem.b;
  ctx.velocity = [A](const Vec& p) -> Vec { return A * p; };
  ctx.constraint_velocity = [b](const Vec& w) -> Vec { return w + b; };
  return ctx;
}

LcpSolution augmented_lagrangian_solve(const AlContext& ctx,
                                       const LcpSolverConfig& cfg,
                                       const Vec* warm_start) {
  if (!ctx.velocity || !ctx.constraint_velocity)
    throw UnsupportedError("augmented Lagrangian context is incomplete");
  const double r = cfg.r > 0.0 ? cfg.r : ctx.suggested_r;

  ContactProblem shape;  // carries only the equality mask for the residuals
  shape.A = Mat::Zero(ctx.m, ctx.m);
  shape.b = Vec::Zero(ctx.m);
  shape.equality = ctx.equality;

  Vec p = warm_start ? *warm_start : Vec::Zero(ctx.m);
  if (p.size() != ctx.m)
    throw DimensionError("lcp warm start has wrong length");

  auto eval_u = [&](const Vec& pp) -> Vec {
    return ctx.constraint_velocity(ctx.velocity(pp));
  };

  Vec u = eval_u(p);
  double residual = 0.0;
  auto done = [&](const Vec& pp, const Vec& uu) {
    return accepted(shape, pp, uu, r, cfg.tol, &residual);
  };

  int iter = 0;
  bool converged = done(p, u);
  // Four-step loop: (1) velocity from p, (2) constraint velocity, (3)
  // projected multiplier update, (4) fixed-point test.
  while (!converged && iter < cfg.max_iter) {
    for (int i = 0; i < ctx.m; ++i) {
      const double step = p(i) - r * u(i);
      p(i) = (shape.is_equality(i)) ? step : std::max(0.0, step);
    }
    u = eval_u(p);
    ++iter;
    converged = done(p, u);
  }

  LcpSolution sol;
  sol.p = p;
  sol.u = u;
  sol.iterations = iter;
  sol.residual = residual;
  sol.converged = converged;
  return sol;
}

LcpSolution enumerate_solve(const ContactProblem& problem) {
  problem.validate();
  const int m = problem.size();
  if (m > 12)
    throw CapacityError("enumeration oracle limited to 12 constraints");
  if (m == 0) {
    LcpSolution sol;
    sol.p = Vec();
    sol.u = Vec();
    sol.converged = true;
    return sol;
  }

  const double accept_tol =
      1e-12 * (1.0 + problem.b.cwiseAbs().maxCoeff() +
               problem.A.cwiseAbs().maxCoeff());

  unsigned forced = 0;  // equality rows belong to every candidate set
  for (int i = 0; i < m; ++i)
    if (problem.is_equality(i)) forced |= 1u << i;

  bool found = false;
  double best_obj = 0.0;
  Vec best_p;
  unsigned best_mask = 0;

  auto lex_less = [m](unsigned a, unsigned b) {
    // lexicographic order on the sorted index lists
    for (int i = 0; i < m; ++i) {
      const bool ia = a & (1u << i), ib = b & (1u << i);
      if (ia != ib) return ia;  // the set containing the smaller index wins
    }
    return false;
  };

  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if ((mask & forced) != forced) continue;
    std::vector<int> active;
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i)) active.push_back(i);

    Vec p = Vec::Zero(m);
    if (!active.empty()) {
      const int k = static_cast<int>(active.size());
      Mat As(k, k);
      Vec bs(k);
      for (int i = 0; i < k; ++i) {
        bs(i) = -problem.b(active[static_cast<size_t>(i)]);
        for (int j = 0; j < k; ++j)
          As(i, j) = problem.A(active[static_cast<size_t>(i)],
                               active[static_cast<size_t>(j)]);
      }
      Eigen::FullPivLU<Mat> lu(As);
      if (!lu.isInvertible()) continue;  // singular principal submatrix
      const Vec ps = lu.solve(bs);
      for (int i = 0; i < k; ++i) p(active[static_cast<size_t>(i)]) = ps(i);
    }

    // feasibility: p >= 0 on active complementarity rows, u >= 0 elsewhere
    bool ok = true;
    for (int i = 0; i < m && ok; ++i)
      if ((mask & (1u << i)) && !problem.is_equality(i))
        ok = p(i) >= -accept_tol;
    Vec u;
    if (ok) {
      u = problem.A * p + problem.b;
      for (int i = 0; i < m && ok; ++i)
        if (!(mask & (1u << i))) ok = u(i) >= -accept_tol;
    }
    if (!ok) continue;

    const double obj = p.dot(problem.A * p) + p.dot(problem.b);
    const bool better =
        !found || obj < best_obj - accept_tol ||
        (std::abs(obj - best_obj) <= accept_tol && lex_less(mask, best_mask));
    if (better) {
      found = true;
      best_obj = obj;
      best_p = p;
      best_mask = mask;
    }
  }

  if (!found)
    throw AnalysisError("enumeration found no feasible active set");
  LcpSolution sol;
  sol.u = problem.A * best_p + problem.b;
  sol.p = std::move(best_p);
  sol.converged = true;
  sol.residual = complementarity_residual(problem, sol.p, sol.u);
  return sol;
}

}  // namespace cdyn::lcp
