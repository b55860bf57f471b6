// Error taxonomy shared by every cdyn component.  All failures that a caller
// could reasonably branch on get their own type; everything derives from
// cdyn::Error so "catch the library" stays a one-liner.
#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace cdyn {

// Short scientific rendering for diagnostics; std::to_string's fixed six
// decimals would print small residuals as 0.000000.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Mismatched sizes, out-of-range arguments, broken type invariants.
class DimensionError : public Error {
public:
  using Error::Error;
};

// Operation asked of an object that cannot support it (missing callback,
// singular pencil handed to an index computation, order > max_order, ...).
class UnsupportedError : public Error {
public:
  using Error::Error;
};

// Structural analysis failed (singular pencil, no convergence of an
// analysis loop, ...).
class AnalysisError : public Error {
public:
  using Error::Error;
};

// A rank decision fell inside the ambiguity band around the tolerance; the
// caller must tighten the tolerance or rescale instead of trusting a guess.
class ToleranceAmbiguityError : public AnalysisError {
public:
  using AnalysisError::AnalysisError;
};

// A time step could not be completed (Newton divergence, LCP solver failure).
// Carries enough context to diagnose the run without a debugger.
class StepFailure : public Error {
public:
  StepFailure(const std::string& what, double t, double residual)
      : Error(what + " (t=" + format_double(t) +
              ", residual=" + format_double(residual) + ")"),
        t_(t), residual_(residual) {}
  double t() const { return t_; }
  double residual() const { return residual_; }

private:
  double t_;
  double residual_;
};

// A linear system that must be solvable turned out rank deficient.
class RankDeficiencyError : public Error {
public:
  using Error::Error;
};

// Manifold projection did not converge.
class ProjectionFailure : public Error {
public:
  using Error::Error;
};

// Problem size exceeds a documented hard limit (e.g. exhaustive enumeration).
class CapacityError : public Error {
public:
  using Error::Error;
};

// Random generation (packing, sampling) exhausted its attempt budget.
class GenerationError : public Error {
public:
  using Error::Error;
};

// Bad configuration file or inconsistent option combination.
class ConfigError : public Error {
public:
  using Error::Error;
};

// File I/O problems (missing config, unwritable output path).
class IoError : public Error {
public:
  using Error::Error;
};

}  // namespace cdyn
