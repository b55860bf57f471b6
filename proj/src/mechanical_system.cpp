#include "cdyn/mechanical_system.hpp"

#include <numeric>

namespace cdyn {

void MechanicalSystem::validate() const {
  if (n_q <= 0) throw DimensionError("MechanicalSystem: n_q must be positive");
  if (n_lambda < 0 || n_u < 0)
    throw DimensionError("MechanicalSystem: negative constraint count");
  // A meaningful constrained model keeps fewer constraints than coordinates;
  // n_lambda = n_q would lock every degree of freedom.
  if (n_lambda > 0 && n_lambda >= n_q)
    throw DimensionError(
        "MechanicalSystem: bilateral constraint count must be < n_q");
  if (!mass) throw UnsupportedError("MechanicalSystem: mass callback missing");
  if (!force)
    throw UnsupportedError("MechanicalSystem: force callback missing");
  if (n_lambda > 0) {
    if (!bilateral)
      throw UnsupportedError("MechanicalSystem: bilateral callback missing");
    if (!bilateral_jacobian)
      throw UnsupportedError(
          "MechanicalSystem: bilateral_jacobian callback missing");
  }
  if (n_u > 0) {
    if (!unilateral && !unilateral_rows)
      throw UnsupportedError("MechanicalSystem: unilateral callback missing");
    if (!unilateral_jacobian && !unilateral_rows)
      throw UnsupportedError(
          "MechanicalSystem: unilateral_jacobian callback missing");
  }
}

double kinetic_energy(const MechanicalSystem& sys, const SystemState& state) {
  if (state.v.size() != sys.n_q)
    throw DimensionError("kinetic_energy: v has wrong size");
  const Mat M = sys.mass(state.q);
  return 0.5 * state.v.dot(M * state.v);
}

double total_energy(const MechanicalSystem& sys, const SystemState& state) {
  if (!sys.potential)
    throw UnsupportedError("total_energy: system declares no potential");
  return kinetic_energy(sys, state) + sys.potential(state.q);
}

ConstraintResiduals constraint_residuals(const MechanicalSystem& sys,
                                         const SystemState& state) {
  ConstraintResiduals res;
  if (sys.n_lambda == 0) {
    res.g = Vec();
    res.gv = Vec();
    return res;
  }
  res.g = sys.bilateral(state.q);
  res.gv = sys.bilateral_jacobian(state.q) * state.v;
  if (res.g.size() != sys.n_lambda || res.gv.size() != sys.n_lambda)
    throw DimensionError("constraint_residuals: callback size mismatch");
  res.g_inf = res.g.size() ? res.g.cwiseAbs().maxCoeff() : 0.0;
  res.gv_inf = res.gv.size() ? res.gv.cwiseAbs().maxCoeff() : 0.0;
  return res;
}

void unilateral_subset(const MechanicalSystem& sys, const Vec& q,
                       const std::vector<int>& ids, Vec& gaps, Mat& jac) {
  const int m = static_cast<int>(ids.size());
  if (sys.unilateral_rows) {
    sys.unilateral_rows(q, ids, gaps, jac);
    if (gaps.size() != m || jac.rows() != m || jac.cols() != sys.n_q)
      throw DimensionError("unilateral_rows: callback size mismatch");
    return;
  }
  const Vec all_gaps = sys.unilateral(q);
  const Mat all_jac = sys.unilateral_jacobian(q);
  if (all_gaps.size() != sys.n_u || all_jac.rows() != sys.n_u)
    throw DimensionError("unilateral callbacks: size mismatch");
  gaps.resize(m);
  jac.resize(m, sys.n_q);
  for (int i = 0; i < m; ++i) {
    const int s = ids[static_cast<size_t>(i)];
    if (s < 0 || s >= sys.n_u)
      throw DimensionError("unilateral_subset: id out of range");
    gaps(i) = all_gaps(s);
    jac.row(i) = all_jac.row(s);
  }
}

std::vector<int> candidate_contacts(const MechanicalSystem& sys, const Vec& q,
                                    double cutoff) {
  if (sys.contact_candidates) return sys.contact_candidates(q, cutoff);
  std::vector<int> ids(static_cast<size_t>(sys.n_u));
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace cdyn
