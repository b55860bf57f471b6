// Ready-made systems: the planar pendulum on the unit circle, an RL
// differentiator circuit as a linear DAE, a bouncing ball, and a pile of
// rotation-free disks in a box, plus the flat key=value configuration format
// shared by the command-line driver.
#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cdyn/integrators.hpp"
#include "cdyn/linear_dae.hpp"
#include "cdyn/mechanical_system.hpp"
#include "cdyn/nonsmooth.hpp"

namespace cdyn::scen {

// A mechanical scenario: the system, a consistent initial state, and the
// restitution coefficient its contacts are meant to run with.
struct Scenario {
  MechanicalSystem system;
  SystemState initial;
  std::string name;
  double restitution = 0.0;
};

// Unit-mass point on the unit circle, gravity gamma in -y:
//   M = I, g(q) = q1^2 + q2^2 - 1, curvature 2(v1^2 + v2^2),
//   potential gamma * q2.  Initial state released at angle alpha0 from the
// lower rest position with angular rate alpha_dot0 (both default 0, giving
// the consistent rest state q = (0,-1), v = 0).
Scenario build_pendulum(double gamma, double alpha0 = 0.0,
                        double alpha_dot0 = 0.0);

// RL differentiator: resistance feeding an ideal op-amp with an inductive
// feedback branch.  Unknowns x = (V1, V2, V3, I, I_L, I_V); the only
// derivative enters through the inductor row L * dI_L/dt = V2 - V3, so E is
// singular and the system has differentiation index 2.  The exact output is
// V3(t) = -(L/R) * dV/dt.  source must be scalar (dim 1) and provide at
// least one derivative.
dae::LinearDae build_differentiator(double resistance, double inductance,
                                    const dae::SourceTerm& source);

// Unit-mass ball dropped from `height` onto the floor: n_q = 1, gap g_u = q.
Scenario build_bouncing_ball(double gamma, double restitution, double height);

struct DiskPileParams {
  int n_disks = 100;
  double radius = 1.0;
  double gamma = 9.81;
  // Box with floor y = 0 and walls x = 0, x = box_width (no ceiling);
  // box_width <= 0 selects 36 * radius.
  double box_width = 0.0;
  unsigned long seed = 1;
  // Explicit centers override the packing generator (must be conflict-free).
  std::vector<std::pair<double, double>> centers;
};

// Rotation-free disks under gravity.  q stacks the centers (x_i, y_i);
// unilateral rows are ordered walls-first (disk i: floor 3i, left wall
// 3i+1, right wall 3i+2) followed by all pairs (i<j) in lexicographic
// order, so n_u = 3n + n(n-1)/2.  Gap rows are evaluated sparsely and a
// uniform grid with cell size 2*radius supplies contact candidates.
// Initial placement is seeded rejection sampling on a jittered lattice;
// an impossible placement raises GenerationError.
Scenario build_disk_pile(const DiskPileParams& params);

// Everything the command-line driver can configure, merged from an optional
// flat config file and flag overrides.
struct ScenarioConfig {
  std::string scenario = "pendulum";
  std::string integrator = "ggl";  // index3|baumgarte|ggl|half-explicit|
                                   // shake|moreau-jean
  double gamma = 9.81;
  double alpha0 = 0.155;      // pendulum release angle
  double alpha_dot0 = 0.0;
  double resistance = 1.0;    // circuit R
  double inductance = 1.0;    // circuit L
  double height = 1.0;        // ball drop height
  double restitution = 0.0;
  int n_disks = 100;
  double radius = 1.0;
  double box_width = 0.0;
  unsigned long seed = 1;
  double t_end = 5.0;
  int stride = 1;
  std::string output;  // CSV path; empty = stdout
  integrators::IntegratorConfig smooth;
  nonsmooth::NonsmoothConfig stepping;
  std::vector<std::pair<double, double>> disks;  // explicit pile centers

  void validate() const;  // ConfigError on out-of-range values
};

// Applies one key = value assignment (the config-file vocabulary; see the
// README for the key list).  Unknown keys raise ConfigError.
void apply_setting(ScenarioConfig& cfg, const std::string& key,
                   const std::string& value);

// Flat text config: one `key = value` per line, '#' comments, blank lines
// ignored, later lines win; `disk = x y` may repeat to place pile disks
// explicitly.
ScenarioConfig load_config(const std::string& path);

// Builds the configured mechanical scenario (ConfigError for the
// differentiator, which is not a mechanical system).
Scenario build_scenario(const ScenarioConfig& cfg);

}  // namespace cdyn::scen
