#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "cdyn/mechanical_system.hpp"

using namespace cdyn;

namespace {

// Planar pendulum with unit mass and rod length 1:
//   M = I,  f = (0, -gamma),  g(q) = q1^2 + q2^2 - 1,
//   G = (2 q1, 2 q2),  kappa = 2 (v1^2 + v2^2),  U = gamma * q2.
MechanicalSystem pendulum(double gamma = 1.0) {
  MechanicalSystem sys;
  sys.n_q = 2;
  sys.n_lambda = 1;
  sys.mass = [](const Vec& q) {
    (void)q;
    return Mat::Identity(2, 2);
  };
  sys.force = [gamma](const Vec&, const Vec&, double) {
    Vec f(2);
    f << 0.0, -gamma;
    return f;
  };
  sys.bilateral = [](const Vec& q) {
    Vec g(1);
    g(0) = q.squaredNorm() - 1.0;
    return g;
  };
  sys.bilateral_jacobian = [](const Vec& q) {
    Mat G(1, 2);
    G << 2.0 * q(0), 2.0 * q(1);
    return G;
  };
  sys.curvature = [](const Vec&, const Vec& v) {
    Vec k(1);
    k(0) = 2.0 * v.squaredNorm();
    return k;
  };
  sys.potential = [gamma](const Vec& q) { return gamma * q(1); };
  return sys;
}

SystemState state_of(double q1, double q2, double v1, double v2) {
  SystemState s;
  s.q = Vec(2);
  s.q << q1, q2;
  s.v = Vec(2);
  s.v << v1, v2;
  return s;
}

}  // namespace

TEST_CASE("kinetic energy is the mass-weighted squared velocity") {
  auto sys = pendulum();
  // T = 1/2 v^T M v with M = I: v = (1, 0) gives exactly 1/2.
  CHECK(kinetic_energy(sys, state_of(0.0, -1.0, 1.0, 0.0)) == 0.5);
  CHECK(kinetic_energy(sys, state_of(0.0, -1.0, 0.0, 0.0)) == 0.0);
  // Non-identity mass: M = diag(2, 3), v = (1, 1) -> T = 2.5.
  MechanicalSystem heavy = sys;
  heavy.mass = [](const Vec&) {
    Mat m = Mat::Zero(2, 2);
    m(0, 0) = 2.0;
    m(1, 1) = 3.0;
    return m;
  };
  CHECK(kinetic_energy(heavy, state_of(1.0, 0.0, 1.0, 1.0)) ==
        doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("total energy adds the declared potential") {
  auto sys = pendulum(1.0);
  // Hanging at rest with unit swing velocity: H = 1/2 - 1 = -1/2.
  CHECK(total_energy(sys, state_of(0.0, -1.0, 1.0, 0.0)) ==
        doctest::Approx(-0.5).epsilon(1e-15));

  MechanicalSystem bare = sys;
  bare.potential = nullptr;
  CHECK_THROWS_AS(total_energy(bare, state_of(0.0, -1.0, 0.0, 0.0)),
                  UnsupportedError);
}

TEST_CASE("constraint residuals vanish on the manifold") {
  auto sys = pendulum();
  // (0.6, -0.8) lies on the unit circle and (0.8, 0.6) is tangent there.
  auto res = constraint_residuals(sys, state_of(0.6, -0.8, 0.8, 0.6));
  CHECK(res.g_inf <= 1e-15);
  CHECK(res.gv_inf <= 1e-15);
  CHECK(res.g.size() == 1);
  CHECK(res.gv.size() == 1);
}

TEST_CASE("constraint residuals report violations") {
  auto sys = pendulum();
  // q = (0, -1.1): g = 1.21 - 1 = 0.21.  v = (0, 1): G v = 2*(-1.1)*1 = -2.2.
  auto res = constraint_residuals(sys, state_of(0.0, -1.1, 0.0, 1.0));
  CHECK(res.g(0) == doctest::Approx(0.21).epsilon(1e-14));
  CHECK(res.gv(0) == doctest::Approx(-2.2).epsilon(1e-14));
  CHECK(res.g_inf == doctest::Approx(0.21).epsilon(1e-14));
  CHECK(res.gv_inf == doctest::Approx(2.2).epsilon(1e-14));
}

TEST_CASE("unconstrained systems report empty residuals") {
  MechanicalSystem sys;
  sys.n_q = 1;
  sys.mass = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.force = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  SystemState s;
  s.q = Vec::Zero(1);
  s.v = Vec::Zero(1);
  auto res = constraint_residuals(sys, s);
  CHECK(res.g.size() == 0);
  CHECK(res.g_inf == 0.0);
  CHECK(res.gv_inf == 0.0);
}

TEST_CASE("validation rejects inconsistent setups") {
  // A meaningful constrained model needs n_lambda < n_q.
  auto sys = pendulum();
  sys.n_lambda = 2;
  CHECK_THROWS_AS(sys.validate(), DimensionError);
  sys.n_lambda = 3;
  CHECK_THROWS_AS(sys.validate(), DimensionError);

  auto ok = pendulum();
  CHECK_NOTHROW(ok.validate());

  MechanicalSystem missing;
  missing.n_q = 2;
  CHECK_THROWS_AS(missing.validate(), UnsupportedError);  // no mass callback

  auto no_jac = pendulum();
  no_jac.bilateral_jacobian = nullptr;
  CHECK_THROWS_AS(no_jac.validate(), UnsupportedError);

  MechanicalSystem contacts = pendulum();
  contacts.n_lambda = 0;
  contacts.bilateral = nullptr;
  contacts.bilateral_jacobian = nullptr;
  contacts.n_u = 1;
  CHECK_THROWS_AS(contacts.validate(), UnsupportedError);  // no gap callback
}

TEST_CASE("unilateral subset evaluation matches the dense callbacks") {
  // Two independent 1D gaps: g_u(q) = (q0 - 1, 3 - q0).
  MechanicalSystem sys;
  sys.n_q = 1;
  sys.n_u = 2;
  sys.mass = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.force = [](const Vec&, const Vec&, double) { return Vec::Zero(1); };
  sys.unilateral = [](const Vec& q) {
    Vec g(2);
    g << q(0) - 1.0, 3.0 - q(0);
    return g;
  };
  sys.unilateral_jacobian = [](const Vec&) {
    Mat G(2, 1);
    G << 1.0, -1.0;
    return G;
  };

  Vec q(1);
  q << 2.5;
  Vec gaps;
  Mat jac;
  unilateral_subset(sys, q, {1}, gaps, jac);
  CHECK(gaps.size() == 1);
  CHECK(gaps(0) == doctest::Approx(0.5));
  CHECK(jac(0, 0) == -1.0);

  // Default candidate list is every id in ascending order.
  auto ids = candidate_contacts(sys, q, 0.0);
  REQUIRE(ids.size() == 2);
  CHECK(ids[0] == 0);
  CHECK(ids[1] == 1);

  // A declared broadphase takes over.
  sys.contact_candidates = [](const Vec&, double) {
    return std::vector<int>{1};
  };
  auto filtered = candidate_contacts(sys, q, 0.0);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered[0] == 1);
}
