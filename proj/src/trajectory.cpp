#include "cdyn/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace cdyn::traj {

TrajectoryRow make_row(const MechanicalSystem& sys, const SystemState& state,
                       int iters, double comp_res) {
  TrajectoryRow row;
  row.t = state.t;
  row.q = state.q;
  row.v = state.v;
  row.lambda = state.lambda.size() == sys.n_lambda ? state.lambda
                                                   : Vec::Zero(sys.n_lambda);
  row.p = state.p.size() == sys.n_u ? state.p : Vec::Zero(sys.n_u);
  row.iters = iters;
  row.comp_res = comp_res;

  if (sys.n_lambda > 0) {
    const auto res = constraint_residuals(sys, state);
    row.g_inf = res.g_inf;
    row.gv_inf = res.gv_inf;
  }

  if (sys.n_u > 0) {
    if (sys.unilateral) {
      row.min_gap = sys.unilateral(state.q).minCoeff();
    } else {
      std::vector<int> all(static_cast<size_t>(sys.n_u));
      std::iota(all.begin(), all.end(), 0);
      Vec gaps;
      Mat jac;
      unilateral_subset(sys, state.q, all, gaps, jac);
      row.min_gap = gaps.minCoeff();
    }
  } else {
    row.min_gap = std::numeric_limits<double>::infinity();
  }

  row.e_kin = kinetic_energy(sys, state);
  row.e_tot = sys.potential ? total_energy(sys, state)
                            : std::numeric_limits<double>::quiet_NaN();
  return row;
}

Recorder::Recorder(const MechanicalSystem& sys, int stride)
    : sys_(sys), stride_(stride) {
  if (stride_ < 1) throw DimensionError("recorder stride must be >= 1");
}

void Recorder::push(const SystemState& state, int iters, double comp_res,
                    bool last) {
  const bool due = index_ % stride_ == 0;
  ++index_;
  if (!due && !last) return;
  rows_.push_back(make_row(sys_, state, iters, comp_res));
}

namespace {

void append_number(std::string& line, double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  line += buf;
}

void append_block(std::string& header, const char* prefix, int n) {
  for (int i = 0; i < n; ++i) {
    header += ',';
    header += prefix;
    header += std::to_string(i);
  }
}

}  // namespace

std::string csv_header(int n_q, int n_lambda, int n_u) {
  std::string h = "t";
  append_block(h, "q_", n_q);
  append_block(h, "v_", n_q);
  append_block(h, "lambda_", n_lambda);
  append_block(h, "p_", n_u);
  h += ",g_inf,gv_inf,min_gap,e_kin,e_tot,iters,comp_res";
  return h;
}

void write_csv(std::ostream& os, const std::vector<TrajectoryRow>& rows,
               int n_q, int n_lambda, int n_u) {
  os << csv_header(n_q, n_lambda, n_u) << '\n';
  std::string line;
  for (const auto& row : rows) {
    if (row.q.size() != n_q || row.v.size() != n_q ||
        row.lambda.size() != n_lambda || row.p.size() != n_u)
      throw DimensionError("trajectory row does not match the declared sizes");
    line.clear();
    append_number(line, row.t);
    for (Eigen::Index i = 0; i < row.q.size(); ++i) {
      line += ',';
      append_number(line, row.q(i));
    }
    for (Eigen::Index i = 0; i < row.v.size(); ++i) {
      line += ',';
      append_number(line, row.v(i));
    }
    for (Eigen::Index i = 0; i < row.lambda.size(); ++i) {
      line += ',';
      append_number(line, row.lambda(i));
    }
    for (Eigen::Index i = 0; i < row.p.size(); ++i) {
      line += ',';
      append_number(line, row.p(i));
    }
    for (double x : {row.g_inf, row.gv_inf, row.min_gap, row.e_kin, row.e_tot}) {
      line += ',';
      append_number(line, x);
    }
    line += ',';
    line += std::to_string(row.iters);
    line += ',';
    append_number(line, row.comp_res);
    os << line << '\n';
  }
}

void write_csv_file(const std::string& path,
                    const std::vector<TrajectoryRow>& rows, int n_q,
                    int n_lambda, int n_u) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open trajectory output file: " + path);
  write_csv(os, rows, n_q, n_lambda, n_u);
  os.flush();
  if (!os) throw IoError("write to trajectory output file failed: " + path);
}

}  // namespace cdyn::traj
