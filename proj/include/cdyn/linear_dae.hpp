// Linear constant-coefficient DAEs
//
//   E x' + H x = c(t),   E possibly singular,
//
// analyzed through the matrix pencil (E, H): regularity test, differentiation
// index by shuffle-style rank reduction, and closed-form solution of systems
// already given in decoupled (Kronecker/Weierstrass) block form
//
//   y' + C y = delta(t),        N z' + z = theta(t),  N nilpotent,
//
// whose algebraic part has the finite sum  z = sum_l (-1)^l N^l theta^(l).
#pragma once

#include <functional>
#include <vector>

#include "cdyn/types.hpp"

namespace cdyn::dae {

// Vector-valued time source with derivatives up to max_order.
// eval(t, l) returns the l-th derivative; asking beyond max_order throws
// UnsupportedError.
struct SourceTerm {
  int dim = 0;
  int max_order = 0;
  std::function<Vec(double t, int order)> eval_raw;

  Vec eval(double t, int order = 0) const;

  static SourceTerm zero(int dim);
  // Entries c_i(t) = amp_i * sin(omega_i t + phase_i); derivatives exact.
  static SourceTerm harmonic(const Vec& amp, const Vec& omega,
                             const Vec& phase, int max_order = 8);
  // Polynomial source: coefficient k holds the t^k vector coefficient.
  static SourceTerm polynomial(const std::vector<Vec>& coeffs);
};

struct LinearDae {
  Mat E;
  Mat H;
  SourceTerm c;
};

// Decoupled block data.  C is the dynamic block (size m x m), N the nilpotent
// block (size (n-m) x (n-m));  either may be empty.
struct CanonicalBlocks {
  Mat C;
  Mat N;
};

// Regularity of the pencil mu*E + H probed at the fixed sample points
// mu = 1, 2, ..., 2n+1: a degree-<=n polynomial det(mu E + H) that vanishes
// at all of them is identically zero.  Singularity of an individual sample is
// decided with a rank test at tol_rel * ||(E, H)||.
bool pencil_is_regular(const Mat& E, const Mat& H, double tol_rel = 1e-10);

// Differentiation index by shuffle-style rank reduction: repeatedly split E
// into full-row-rank and zero rows, differentiate the algebraic rows (their
// H-part becomes new E-rows), and count sweeps until E is nonsingular.
// Throws UnsupportedError for irregular pencils and ToleranceAmbiguityError
// when a rank decision falls inside the ambiguity band around the tolerance.
int differentiation_index(const Mat& E, const Mat& H, double tol_rel = 1e-10);

// Smallest k with N^k = 0 (k = 0 for an empty block).  Throws AnalysisError
// if N is not nilpotent.
int nilpotency_degree(const Mat& N, double tol_rel = 1e-12);

// Closed-form algebraic solution z(t) = sum_{l=0}^{k-1} (-1)^l N^l theta^(l).
// Requires theta.max_order >= k-1, otherwise UnsupportedError.
Vec solve_nilpotent(const Mat& N, const SourceTerm& theta, double t);

struct DecoupledSolution {
  std::vector<double> t;
  std::vector<Vec> y;  // dynamic block states
  std::vector<Vec> z;  // algebraic block states
};

// Exact solution of the decoupled system on a uniform output grid of
// n_out+1 points spanning [t0, t1].  The dynamic block uses the matrix
// exponential with the variation-of-constants integral evaluated by
// adaptive composite Simpson quadrature (refined until the relative change
// is <= quad_tol); the algebraic block uses solve_nilpotent.
DecoupledSolution solve_decoupled(const CanonicalBlocks& blocks,
                                  const SourceTerm& delta,
                                  const SourceTerm& theta, const Vec& y0,
                                  double t0, double t1, int n_out,
                                  double quad_tol = 1e-10);

// Consistency of an algebraic initial value: ||z0 - z(t0)||_inf <= tol.
bool check_consistency(const CanonicalBlocks& blocks, const SourceTerm& theta,
                       const Vec& z0, double t0, double tol = 1e-10);

}  // namespace cdyn::dae
