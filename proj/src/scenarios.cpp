#include "cdyn/scenarios.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <unordered_map>

#include "cdyn/log.hpp"

namespace cdyn::scen {

Scenario build_pendulum(double gamma, double alpha0, double alpha_dot0) {
  if (!(gamma > 0.0)) throw ConfigError("pendulum: gamma must be > 0");
  Scenario sc;
  sc.name = "pendulum";
  auto& sys = sc.system;
  sys.n_q = 2;
  sys.n_lambda = 1;
  sys.n_u = 0;
  sys.mass = [](const Vec&) { return Mat::Identity(2, 2); };
  sys.force = [gamma](const Vec&, const Vec&, double) {
    Vec f(2);
    f << 0.0, -gamma;
    return f;
  };
  sys.bilateral = [](const Vec& q) {
    return Vec::Constant(1, q(0) * q(0) + q(1) * q(1) - 1.0);
  };
  sys.bilateral_jacobian = [](const Vec& q) {
    Mat G(1, 2);
    G << 2.0 * q(0), 2.0 * q(1);
    return G;
  };
  sys.curvature = [](const Vec&, const Vec& v) {
    return Vec::Constant(1, 2.0 * (v(0) * v(0) + v(1) * v(1)));
  };
  sys.potential = [gamma](const Vec& q) { return gamma * q(1); };

  sc.initial.t = 0.0;
  sc.initial.q = Vec(2);
  sc.initial.q << std::sin(alpha0), -std::cos(alpha0);
  sc.initial.v = Vec(2);
  sc.initial.v << alpha_dot0 * std::cos(alpha0), alpha_dot0 * std::sin(alpha0);
  sc.initial.lambda = Vec::Zero(1);
  return sc;
}

dae::LinearDae build_differentiator(double resistance, double inductance,
                                    const dae::SourceTerm& source) {
  if (!(resistance > 0.0) || !(inductance > 0.0))
    throw ConfigError("differentiator: R and L must be > 0");
  if (source.dim != 1)
    throw DimensionError("differentiator: source must be scalar");

  // Unknowns x = (V1, V2, V3, I, I_L, I_V); rows are the node/branch
  // relations, with the single derivative in the inductor row.
  dae::LinearDae sys;
  sys.E = Mat::Zero(6, 6);
  sys.E(5, 4) = inductance;  // L * dI_L/dt

  const double g = 1.0 / resistance;
  sys.H = Mat::Zero(6, 6);
  // I + (V1 - V2)/R = 0
  sys.H(0, 0) = g;
  sys.H(0, 1) = -g;
  sys.H(0, 3) = 1.0;
  // -(V1 - V2)/R + I_L = 0
  sys.H(1, 0) = -g;
  sys.H(1, 1) = g;
  sys.H(1, 4) = 1.0;
  // -I_L + I_V = 0
  sys.H(2, 4) = -1.0;
  sys.H(2, 5) = 1.0;
  // V1 = V(t)
  sys.H(3, 0) = 1.0;
  // V2 = 0
  sys.H(4, 1) = 1.0;
  // L * dI_L/dt - V2 + V3 = 0
  sys.H(5, 1) = -1.0;
  sys.H(5, 2) = 1.0;

  dae::SourceTerm c;
  c.dim = 6;
  c.max_order = source.max_order;
  c.eval_raw = [source](double t, int order) {
    Vec out = Vec::Zero(6);
    out(3) = source.eval(t, order)(0);
    return out;
  };
  sys.c = c;
  return sys;
}

Scenario build_bouncing_ball(double gamma, double restitution, double height) {
  if (!(gamma > 0.0)) throw ConfigError("bouncing ball: gamma must be > 0");
  if (!(height > 0.0)) throw ConfigError("bouncing ball: height must be > 0");
  if (!(restitution >= 0.0 && restitution <= 1.0))
    throw ConfigError("bouncing ball: restitution must lie in [0, 1]");
  Scenario sc;
  sc.name = "ball";
  sc.restitution = restitution;
  auto& sys = sc.system;
  sys.n_q = 1;
  sys.n_lambda = 0;
  sys.n_u = 1;
  sys.mass = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.force = [gamma](const Vec&, const Vec&, double) {
    return Vec::Constant(1, -gamma);
  };
  sys.unilateral = [](const Vec& q) { return q; };
  sys.unilateral_jacobian = [](const Vec&) { return Mat::Identity(1, 1); };
  sys.potential = [gamma](const Vec& q) { return gamma * q(0); };

  sc.initial.t = 0.0;
  sc.initial.q = Vec::Constant(1, height);
  sc.initial.v = Vec::Zero(1);
  sc.initial.p = Vec::Zero(1);
  return sc;
}

namespace {

// Disk-pile constraint layout: walls first (disk i: floor 3i, left 3i+1,
// right 3i+2), then all pairs (i < j) in lexicographic order.
struct PileLayout {
  int n = 0;
  double radius = 0.0;
  double width = 0.0;

  int wall_rows() const { return 3 * n; }
  int pair_rows() const { return n * (n - 1) / 2; }
  int total_rows() const { return wall_rows() + pair_rows(); }

  int pair_id(int i, int j) const {  // i < j
    return wall_rows() + i * (2 * n - i - 1) / 2 + (j - i - 1);
  }

  // Gap value and (sparse) Jacobian entries of one row.
  double gap(const Vec& q, int id) const {
    if (id < wall_rows()) {
      const int disk = id / 3;
      const double x = q(2 * disk), y = q(2 * disk + 1);
      switch (id % 3) {
        case 0: return y - radius;              // floor
        case 1: return x - radius;              // left wall
        default: return (width - radius) - x;   // right wall
      }
    }
    const auto [i, j] = pair_of(id);
    const double dx = q(2 * i) - q(2 * j);
    const double dy = q(2 * i + 1) - q(2 * j + 1);
    return std::sqrt(dx * dx + dy * dy) - 2.0 * radius;
  }

  void jac_row(const Vec& q, int id, Mat& jac, int row) const {
    if (id < wall_rows()) {
      const int disk = id / 3;
      switch (id % 3) {
        case 0: jac(row, 2 * disk + 1) = 1.0; break;
        case 1: jac(row, 2 * disk) = 1.0; break;
        default: jac(row, 2 * disk) = -1.0; break;
      }
      return;
    }
    const auto [i, j] = pair_of(id);
    double dx = q(2 * i) - q(2 * j);
    double dy = q(2 * i + 1) - q(2 * j + 1);
    double d = std::sqrt(dx * dx + dy * dy);
    if (d < 1e-12) {  // coincident centers: any unit normal is admissible
      dx = 1.0;
      dy = 0.0;
      d = 1.0;
    }
    jac(row, 2 * i) = dx / d;
    jac(row, 2 * i + 1) = dy / d;
    jac(row, 2 * j) = -dx / d;
    jac(row, 2 * j + 1) = -dy / d;
  }

  std::pair<int, int> pair_of(int id) const {
    int k = id - wall_rows();
    int i = 0;
    while (k >= n - i - 1) {
      k -= n - i - 1;
      ++i;
    }
    return {i, i + 1 + k};
  }
};

std::vector<std::pair<double, double>> pack_disks(const DiskPileParams& p,
                                                  double width) {
  const double r = p.radius;
  const double spacing = 2.3 * r;        // loose lattice: margin 0.3 r
  const double jitter = 0.12 * r;        // 80% of half the margin
  const int cols = static_cast<int>(std::ceil(std::sqrt(double(p.n_disks))));

  const double lattice_w = (cols - 1) * spacing;
  const double x0 = 0.5 * (width - lattice_w);
  if (x0 < r + jitter || x0 + lattice_w > width - r - jitter)
    throw GenerationError("disk pile: box too narrow for the packing lattice");

  std::mt19937 rng(static_cast<std::mt19937::result_type>(p.seed));
  std::uniform_real_distribution<double> dj(-jitter, jitter);

  std::vector<std::pair<double, double>> centers;
  centers.reserve(static_cast<size_t>(p.n_disks));
  const double min_dist2 = (2.0 * r) * (2.0 * r);
  for (int d = 0; d < p.n_disks; ++d) {
    const int row = d / cols, col = d % cols;
    const double lx = x0 + col * spacing;
    const double ly = r + 0.3 * r + row * spacing;
    bool placed = false;
    for (int attempt = 0; attempt < 200 && !placed; ++attempt) {
      const double x = lx + dj(rng);
      const double y = ly + dj(rng);
      if (x < r || x > width - r || y < r) continue;
      bool clear = true;
      for (const auto& c : centers) {
        const double ddx = x - c.first, ddy = y - c.second;
        if (ddx * ddx + ddy * ddy < min_dist2) {
          clear = false;
          break;
        }
      }
      if (clear) {
        centers.emplace_back(x, y);
        placed = true;
      }
    }
    if (!placed)
      throw GenerationError(
          "disk pile: packing failed after 200 attempts for disk " +
          std::to_string(d));
  }
  return centers;
}

}  // namespace

Scenario build_disk_pile(const DiskPileParams& params) {
  if (params.n_disks < 1 && params.centers.empty())
    throw ConfigError("disk pile: need at least one disk");
  if (!(params.radius > 0.0)) throw ConfigError("disk pile: radius must be > 0");
  if (!(params.gamma > 0.0)) throw ConfigError("disk pile: gamma must be > 0");

  const double width =
      params.box_width > 0.0 ? params.box_width : 36.0 * params.radius;

  std::vector<std::pair<double, double>> centers =
      params.centers.empty() ? pack_disks(params, width) : params.centers;
  const int n = static_cast<int>(centers.size());

  if (!params.centers.empty()) {
    // Explicit placements must already be admissible.
    const double min_dist2 = 4.0 * params.radius * params.radius;
    for (int i = 0; i < n; ++i) {
      const auto& [x, y] = centers[static_cast<size_t>(i)];
      if (x < params.radius || x > width - params.radius || y < params.radius)
        throw GenerationError("disk pile: explicit disk " + std::to_string(i) +
                              " intersects a wall");
      for (int j = i + 1; j < n; ++j) {
        const double dx = x - centers[static_cast<size_t>(j)].first;
        const double dy = y - centers[static_cast<size_t>(j)].second;
        if (dx * dx + dy * dy < min_dist2 * (1.0 - 1e-12))
          throw GenerationError("disk pile: explicit disks " +
                                std::to_string(i) + " and " +
                                std::to_string(j) + " overlap");
      }
    }
  }

  PileLayout layout;
  layout.n = n;
  layout.radius = params.radius;
  layout.width = width;

  Scenario sc;
  sc.name = "disk-pile";
  auto& sys = sc.system;
  sys.n_q = 2 * n;
  sys.n_lambda = 0;
  sys.n_u = layout.total_rows();

  const double gamma = params.gamma;
  sys.mass = [n](const Vec&) { return Mat::Identity(2 * n, 2 * n); };
  sys.force = [n, gamma](const Vec&, const Vec&, double) {
    Vec f = Vec::Zero(2 * n);
    for (int i = 0; i < n; ++i) f(2 * i + 1) = -gamma;
    return f;
  };
  sys.potential = [n, gamma](const Vec& q) {
    double u = 0.0;
    for (int i = 0; i < n; ++i) u += gamma * q(2 * i + 1);
    return u;
  };
  sys.unilateral = [layout](const Vec& q) {
    Vec gaps(layout.total_rows());
    for (int id = 0; id < layout.total_rows(); ++id) gaps(id) = layout.gap(q, id);
    return gaps;
  };
  sys.unilateral_jacobian = [layout](const Vec& q) {
    Mat jac = Mat::Zero(layout.total_rows(), 2 * layout.n);
    for (int id = 0; id < layout.total_rows(); ++id)
      layout.jac_row(q, id, jac, id);
    return jac;
  };
  sys.unilateral_rows = [layout](const Vec& q, const std::vector<int>& ids,
                                 Vec& gaps, Mat& jac) {
    const int m = static_cast<int>(ids.size());
    gaps.resize(m);
    jac = Mat::Zero(m, 2 * layout.n);
    for (int s = 0; s < m; ++s) {
      gaps(s) = layout.gap(q, ids[static_cast<size_t>(s)]);
      layout.jac_row(q, ids[static_cast<size_t>(s)], jac, s);
    }
  };
  sys.contact_candidates = [layout](const Vec& q, double cutoff) {
    std::vector<int> out;
    // Walls: exact gap test, O(n).
    for (int i = 0; i < layout.n; ++i)
      for (int w = 0; w < 3; ++w)
        if (layout.gap(q, 3 * i + w) <= cutoff) out.push_back(3 * i + w);
    // Pairs: uniform grid with cell edge 2 r; scan a ring wide enough that
    // any pair within 2 r + cutoff shares the neighborhood.
    const double cell = 2.0 * layout.radius;
    const double reach = 2.0 * layout.radius + cutoff;
    const int ring = static_cast<int>(reach / cell) + 1;
    auto key = [](int cx, int cy) {
      return (static_cast<long long>(cx) << 32) ^
             static_cast<long long>(static_cast<unsigned>(cy));
    };
    std::unordered_map<long long, std::vector<int>> grid;
    std::vector<std::pair<int, int>> cells(static_cast<size_t>(layout.n));
    for (int i = 0; i < layout.n; ++i) {
      const int cx = static_cast<int>(std::floor(q(2 * i) / cell));
      const int cy = static_cast<int>(std::floor(q(2 * i + 1) / cell));
      cells[static_cast<size_t>(i)] = {cx, cy};
      grid[key(cx, cy)].push_back(i);
    }
    std::vector<int> near;
    for (int i = 0; i < layout.n; ++i) {
      near.clear();
      const auto [cx, cy] = cells[static_cast<size_t>(i)];
      for (int ox = -ring; ox <= ring; ++ox)
        for (int oy = -ring; oy <= ring; ++oy) {
          const auto it = grid.find(key(cx + ox, cy + oy));
          if (it == grid.end()) continue;
          for (int j : it->second)
            if (j > i) near.push_back(j);
        }
      std::sort(near.begin(), near.end());
      for (int j : near) {
        const double dx = q(2 * i) - q(2 * j);
        const double dy = q(2 * i + 1) - q(2 * j + 1);
        if (std::sqrt(dx * dx + dy * dy) <= reach)
          out.push_back(layout.pair_id(i, j));
      }
    }
    return out;
  };

  sc.initial.t = 0.0;
  sc.initial.q = Vec(2 * n);
  for (int i = 0; i < n; ++i) {
    sc.initial.q(2 * i) = centers[static_cast<size_t>(i)].first;
    sc.initial.q(2 * i + 1) = centers[static_cast<size_t>(i)].second;
  }
  sc.initial.v = Vec::Zero(2 * n);
  sc.initial.p = Vec::Zero(sys.n_u);
  log_debug("disk pile: %d disks, %d unilateral rows, box width %g", n,
            sys.n_u, width);
  return sc;
}

void ScenarioConfig::validate() const {
  static const std::vector<std::string> scenarios = {
      "pendulum", "differentiator", "ball", "disk-pile"};
  if (std::find(scenarios.begin(), scenarios.end(), scenario) ==
      scenarios.end())
    throw ConfigError("unknown scenario: " + scenario);
  static const std::vector<std::string> integrators = {
      "index3", "baumgarte", "ggl", "half-explicit", "shake", "moreau-jean"};
  if (std::find(integrators.begin(), integrators.end(), integrator) ==
      integrators.end())
    throw ConfigError("unknown integrator: " + integrator);
  if (!(gamma > 0.0)) throw ConfigError("gamma must be > 0");
  if (!(resistance > 0.0)) throw ConfigError("resistance must be > 0");
  if (!(inductance > 0.0)) throw ConfigError("inductance must be > 0");
  if (!(height > 0.0)) throw ConfigError("height must be > 0");
  if (!(radius > 0.0)) throw ConfigError("radius must be > 0");
  if (restitution < 0.0 || restitution > 1.0)
    throw ConfigError("restitution must lie in [0, 1]");
  if (n_disks < 1) throw ConfigError("n_disks must be >= 1");
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(smooth.dt > 0.0)) throw ConfigError("dt must be > 0");
  stepping.validate();
}

namespace {

double parse_double(const std::string& key, const std::string& value) {
  try {
    size_t pos = 0;
    const double x = std::stod(value, &pos);
    while (pos < value.size() && std::isspace(static_cast<unsigned char>(value[pos]))) ++pos;
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("bad numeric value for '" + key + "': " + value);
  }
}

long parse_long(const std::string& key, const std::string& value) {
  const double x = parse_double(key, value);
  const long r = std::lround(x);
  if (static_cast<double>(r) != x)
    throw ConfigError("value for '" + key + "' must be an integer: " + value);
  return r;
}

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  size_t b = s.find_last_not_of(" \t\r");
  return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

}  // namespace

void apply_setting(ScenarioConfig& cfg, const std::string& key,
                   const std::string& value) {
  if (key == "scenario") cfg.scenario = value;
  else if (key == "integrator") cfg.integrator = value;
  else if (key == "gamma") cfg.gamma = parse_double(key, value);
  else if (key == "alpha0") cfg.alpha0 = parse_double(key, value);
  else if (key == "alpha_dot0") cfg.alpha_dot0 = parse_double(key, value);
  else if (key == "resistance") cfg.resistance = parse_double(key, value);
  else if (key == "inductance") cfg.inductance = parse_double(key, value);
  else if (key == "height") cfg.height = parse_double(key, value);
  else if (key == "restitution") {
    cfg.restitution = parse_double(key, value);
    cfg.stepping.restitution = cfg.restitution;
  } else if (key == "n_disks") cfg.n_disks = static_cast<int>(parse_long(key, value));
  else if (key == "radius") cfg.radius = parse_double(key, value);
  else if (key == "box_width") cfg.box_width = parse_double(key, value);
  else if (key == "seed") cfg.seed = static_cast<unsigned long>(parse_long(key, value));
  else if (key == "t_end") cfg.t_end = parse_double(key, value);
  else if (key == "stride") cfg.stride = static_cast<int>(parse_long(key, value));
  else if (key == "output") cfg.output = value;
  else if (key == "dt") {
    cfg.smooth.dt = parse_double(key, value);
    cfg.stepping.h = cfg.smooth.dt;
  } else if (key == "newton_tol") cfg.smooth.newton_tol = parse_double(key, value);
  else if (key == "newton_max_iter")
    cfg.smooth.newton_max_iter = static_cast<int>(parse_long(key, value));
  else if (key == "baumgarte_alpha")
    cfg.smooth.baumgarte_alpha = parse_double(key, value);
  else if (key == "baumgarte_beta")
    cfg.smooth.baumgarte_beta = parse_double(key, value);
  else if (key == "theta") cfg.stepping.theta = parse_double(key, value);
  else if (key == "mode") {
    if (value == "linearized") cfg.stepping.mode = nonsmooth::ConstraintMode::linearized;
    else if (value == "active-set") cfg.stepping.mode = nonsmooth::ConstraintMode::active_set;
    else throw ConfigError("mode must be 'linearized' or 'active-set'");
  } else if (key == "solver") {
    if (value == "pgj") cfg.stepping.solver = lcp::LcpSolverKind::pgj;
    else if (value == "pgs") cfg.stepping.solver = lcp::LcpSolverKind::pgs;
    else if (value == "psor") cfg.stepping.solver = lcp::LcpSolverKind::psor;
    else if (value == "al")
      cfg.stepping.solver = lcp::LcpSolverKind::augmented_lagrangian;
    else throw ConfigError("solver must be one of pgj|pgs|psor|al");
  } else if (key == "tol") cfg.stepping.solver_cfg.tol = parse_double(key, value);
  else if (key == "max_iter")
    cfg.stepping.solver_cfg.max_iter = static_cast<int>(parse_long(key, value));
  else if (key == "r") cfg.stepping.solver_cfg.r = parse_double(key, value);
  else if (key == "relax") cfg.stepping.solver_cfg.alpha = parse_double(key, value);
  else if (key == "activation_tol")
    cfg.stepping.activation_tol = parse_double(key, value);
  else if (key == "candidate_gap")
    cfg.stepping.candidate_gap = parse_double(key, value);
  else if (key == "warm_start")
    cfg.stepping.warm_start = parse_long(key, value) != 0;
  else if (key == "disk") {
    std::istringstream iss(value);
    double x = 0.0, y = 0.0;
    if (!(iss >> x >> y))
      throw ConfigError("disk entries need two coordinates: " + value);
    std::string rest;
    if (iss >> rest) throw ConfigError("disk entries need exactly two coordinates");
    cfg.disks.emplace_back(x, y);
  } else {
    throw ConfigError("unknown configuration key: " + key);
  }
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  ScenarioConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw ConfigError(path + ":" + std::to_string(line_no) + ": empty key");
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return cfg;
}

Scenario build_scenario(const ScenarioConfig& cfg) {
  cfg.validate();
  if (cfg.scenario == "pendulum")
    return build_pendulum(cfg.gamma, cfg.alpha0, cfg.alpha_dot0);
  if (cfg.scenario == "ball")
    return build_bouncing_ball(cfg.gamma, cfg.restitution, cfg.height);
  if (cfg.scenario == "disk-pile") {
    DiskPileParams p;
    p.n_disks = cfg.disks.empty() ? cfg.n_disks
                                  : static_cast<int>(cfg.disks.size());
    p.radius = cfg.radius;
    p.gamma = cfg.gamma;
    p.box_width = cfg.box_width;
    p.seed = cfg.seed;
    p.centers = cfg.disks;
    return build_disk_pile(p);
  }
  throw ConfigError(
      "scenario '" + cfg.scenario +
      "' is not a mechanical system (use analyze-dae for the circuit)");
}

}  // namespace cdyn::scen
