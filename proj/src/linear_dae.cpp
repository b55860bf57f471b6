#include "cdyn/linear_dae.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "cdyn/log.hpp"

namespace cdyn::dae {

// ---------------------------------------------------------------- sources --

Vec SourceTerm::eval(double t, int order) const {
  if (order < 0) throw DimensionError("SourceTerm: negative derivative order");
  if (order > max_order)
    throw UnsupportedError("SourceTerm: derivative order " +
                           std::to_string(order) + " exceeds max_order " +
                           std::to_string(max_order));
  Vec v = eval_raw(t, order);
  if (v.size() != dim) throw DimensionError("SourceTerm: bad callback size");
  return v;
}

SourceTerm SourceTerm::zero(int dim) {
  SourceTerm s;
  s.dim = dim;
  s.max_order = 1 << 20;
  s.eval_raw = [dim](double, int) { return Vec::Zero(dim); };
  return s;
}

SourceTerm SourceTerm::harmonic(const Vec& amp, const Vec& omega,
                                const Vec& phase, int max_order) {
  if (amp.size() != omega.size() || amp.size() != phase.size())
    throw DimensionError("SourceTerm::harmonic: size mismatch");
  SourceTerm s;
  s.dim = static_cast<int>(amp.size());
  s.max_order = max_order;
  s.eval_raw = [amp, omega, phase](double t, int order) {
    Vec v(amp.size());
    for (Eigen::Index i = 0; i < amp.size(); ++i) {
      // d^o/dt^o sin(w t + p) = w^o sin(w t + p + o*pi/2)
      v(i) = amp(i) * std::pow(omega(i), order) *
             std::sin(omega(i) * t + phase(i) + 0.5 * M_PI * order);
    }
    return v;
  };
  return s;
}

SourceTerm SourceTerm::polynomial(const std::vector<Vec>& coeffs) {
  if (coeffs.empty())
    throw DimensionError("SourceTerm::polynomial: no coefficients");
  const Eigen::Index dim = coeffs.front().size();
  for (const Vec& c : coeffs)
    if (c.size() != dim)
      throw DimensionError("SourceTerm::polynomial: ragged coefficients");
  SourceTerm s;
  s.dim = static_cast<int>(dim);
  s.max_order = 1 << 20;  // all derivatives exist (zero beyond the degree)
  s.eval_raw = [coeffs, dim](double t, int order) {
    Vec v = Vec::Zero(dim);
    for (size_t k = coeffs.size(); k-- > 0;) {
      const int deg = static_cast<int>(k);
      if (deg < order) break;
      // falling factorial deg * (deg-1) * ... * (deg-order+1)
      double fac = 1.0;
      for (int j = 0; j < order; ++j) fac *= static_cast<double>(deg - j);
      v += coeffs[k] * (fac * std::pow(t, deg - order));
    }
    return v;
  };
  return s;
}

// ------------------------------------------------------------ rank helpers --

namespace {

// Classified rank of a matrix at absolute threshold tol_abs.  Singular values
// inside (tol_abs/10, tol_abs*10) are ambiguous: the caller cannot trust the
// rank decision at this tolerance.
struct RankInfo {
  int rank = 0;
  bool ambiguous = false;
};

RankInfo classified_rank(const Mat& A, double tol_abs) {
  RankInfo info;
  if (A.size() == 0) return info;
  Eigen::JacobiSVD<Mat> svd(A);
  const Vec& sv = svd.singularValues();
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 10.0 * tol_abs) {
      ++info.rank;
    } else if (sv(i) > 0.1 * tol_abs) {
      info.ambiguous = true;
    }
  }
  return info;
}

double pencil_scale(const Mat& E, const Mat& H) {
  return std::sqrt(E.squaredNorm() + H.squaredNorm());
}

void require_square_pair(const Mat& E, const Mat& H, const char* who) {
  if (E.rows() != E.cols() || H.rows() != H.cols() || E.rows() != H.rows())
    throw DimensionError(std::string(who) + ": E and H must be square and of "
                                            "equal size");
  if (E.rows() == 0) throw DimensionError(std::string(who) + ": empty pencil");
}

}  // namespace

bool pencil_is_regular(const Mat& E, const Mat& H, double tol_rel) {
  require_square_pair(E, H, "pencil_is_regular");
  const int n = static_cast<int>(E.rows());
  const double tol_abs = tol_rel * std::max(pencil_scale(E, H), 1e-300);
  // det(mu E + H) is a polynomial of degree <= n; if it vanishes at the 2n+1
  // fixed samples mu = 1..2n+1 it vanishes identically.  One clearly
  // nonsingular sample therefore certifies regularity.
  bool saw_ambiguous = false;
  for (int mu = 1; mu <= 2 * n + 1; ++mu) {
    RankInfo info = classified_rank(static_cast<double>(mu) * E + H, tol_abs);
    if (info.rank == n && !info.ambiguous) return true;
    if (info.ambiguous) saw_ambiguous = true;
  }
  if (saw_ambiguous)
    throw ToleranceAmbiguityError(
        "pencil_is_regular: rank decision ambiguous at tolerance");
  return false;
}

int differentiation_index(const Mat& E, const Mat& H, double tol_rel) {
  require_square_pair(E, H, "differentiation_index");
  if (!pencil_is_regular(E, H, tol_rel))
    throw UnsupportedError(
        "differentiation_index: pencil is singular; index undefined");
  const int n = static_cast<int>(E.rows());
  const double tol_abs = tol_rel * std::max(pencil_scale(E, H), 1e-300);

  Mat Ew = E;
  Mat Hw = H;
  for (int sweep = 0; sweep <= n; ++sweep) {
    Eigen::JacobiSVD<Mat> svd(Ew, Eigen::ComputeFullU);
    const Vec& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
      if (sv(i) > 10.0 * tol_abs) {
        ++rank;
      } else if (sv(i) > 0.1 * tol_abs) {
        throw ToleranceAmbiguityError(
            "differentiation_index: rank decision ambiguous at tolerance "
            "(singular value " +
            std::to_string(sv(i)) + ")");
      }
    }
    if (rank == n) return sweep;
    // Rotate both matrices so the zero rows of E are at the bottom, then
    // differentiate the exposed algebraic equations 0 = (H x - c): their
    // H-part becomes a new E-row.
    const Mat Ut = svd.matrixU().transpose();
    Ew = Ut * Ew;
    Hw = Ut * Hw;
    const int na = n - rank;
    Ew.bottomRows(na) = Hw.bottomRows(na);
    Hw.bottomRows(na).setZero();
    log_debug("shuffle sweep %d: rank %d of %d", sweep, rank, n);
  }
  throw AnalysisError(
      "differentiation_index: no termination within n sweeps on a regular "
      "pencil");
}

int nilpotency_degree(const Mat& N, double tol_rel) {
  if (N.size() == 0) return 0;
  if (N.rows() != N.cols())
    throw DimensionError("nilpotency_degree: N must be square");
  const int n = static_cast<int>(N.rows());
  const double scale = std::max(1.0, N.cwiseAbs().maxCoeff());
  Mat P = Mat::Identity(n, n);
  for (int k = 1; k <= n; ++k) {
    P = P * N;
    if (P.cwiseAbs().maxCoeff() <= tol_rel * std::pow(scale, k)) return k;
  }
  throw AnalysisError("nilpotency_degree: matrix is not nilpotent");
}

Vec solve_nilpotent(const Mat& N, const SourceTerm& theta, double t) {
  const int k = nilpotency_degree(N);
  if (k == 0) return Vec();
  if (theta.dim != N.rows())
    throw DimensionError("solve_nilpotent: theta dimension mismatch");
  if (theta.max_order < k - 1)
    throw UnsupportedError(
        "solve_nilpotent: source must provide derivatives up to order " +
        std::to_string(k - 1));
  // z = sum_{l=0}^{k-1} (-1)^l N^l theta^(l)(t)
  Vec z = theta.eval(t, 0);
  Mat P = Mat::Identity(N.rows(), N.cols());
  double sign = 1.0;
  for (int l = 1; l < k; ++l) {
    P = P * N;
    sign = -sign;
    z += sign * (P * theta.eval(t, l));
  }
  return z;
}

namespace {

// Composite Simpson approximation of int_{a}^{b} exp(-C (b - s)) delta(s) ds
// with the given number of panels (even subdivision count 2*panels).
Vec simpson_convolution(const Mat& C, const SourceTerm& delta, double a,
                        double b, int panels) {
  const int segments = 2 * panels;
  const double h = (b - a) / segments;
  Vec acc = Vec::Zero(C.rows());
  for (int j = 0; j <= segments; ++j) {
    const double s = a + h * j;
    const double w = (j == 0 || j == segments) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    const Mat expf = (-(b - s) * C).exp();
    acc += w * (expf * delta.eval(s, 0));
  }
  return (h / 3.0) * acc;
}

}  // namespace

DecoupledSolution solve_decoupled(const CanonicalBlocks& blocks,
                                  const SourceTerm& delta,
                                  const SourceTerm& theta, const Vec& y0,
                                  double t0, double t1, int n_out,
                                  double quad_tol) {
  const int m = static_cast<int>(blocks.C.rows());
  const int nz = static_cast<int>(blocks.N.rows());
  if (blocks.C.size() > 0 && blocks.C.rows() != blocks.C.cols())
    throw DimensionError("solve_decoupled: C must be square");
  if (y0.size() != m) throw DimensionError("solve_decoupled: y0 size mismatch");
  if (m > 0 && delta.dim != m)
    throw DimensionError("solve_decoupled: delta dimension mismatch");
  if (n_out < 1) throw DimensionError("solve_decoupled: n_out must be >= 1");
  if (!(t1 > t0)) throw DimensionError("solve_decoupled: need t1 > t0");

  // Nilpotent block data is reused across the whole grid.
  const int kdeg = nilpotency_degree(blocks.N);
  if (kdeg > 0 && theta.dim != nz)
    throw DimensionError("solve_decoupled: theta dimension mismatch");

  DecoupledSolution sol;
  const double dt = (t1 - t0) / n_out;
  Mat prop;  // exp(-C dt), constant on the uniform grid
  if (m > 0) prop = (-dt * blocks.C).exp();

  Vec y = y0;
  for (int i = 0; i <= n_out; ++i) {
    const double t = t0 + dt * i;
    sol.t.push_back(t);
    sol.y.push_back(y);
    sol.z.push_back(kdeg > 0 ? solve_nilpotent(blocks.N, theta, t) : Vec());
    if (i == n_out) break;
    if (m > 0) {
      // Variation of constants over one grid interval with adaptive Simpson:
      // refine until two successive composite approximations agree.
      Vec integral = Vec::Zero(m);
      Vec prev = simpson_convolution(blocks.C, delta, t, t + dt, 1);
      bool converged = false;
      for (int panels = 2; panels <= 4096; panels *= 2) {
        integral = simpson_convolution(blocks.C, delta, t, t + dt, panels);
        if ((integral - prev).cwiseAbs().maxCoeff() <=
            quad_tol * (1.0 + integral.cwiseAbs().maxCoeff())) {
          converged = true;
          break;
        }
        prev = integral;
      }
      if (!converged)
        throw AnalysisError(
            "solve_decoupled: quadrature failed to reach tolerance");
      y = prop * y + integral;
    }
  }
  return sol;
}

bool check_consistency(const CanonicalBlocks& blocks, const SourceTerm& theta,
                       const Vec& z0, double t0, double tol) {
  if (blocks.N.size() == 0) return z0.size() == 0;
  if (z0.size() != blocks.N.rows())
    throw DimensionError("check_consistency: z0 size mismatch");
  const Vec z_exact = solve_nilpotent(blocks.N, theta, t0);
  return (z0 - z_exact).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace cdyn::dae
