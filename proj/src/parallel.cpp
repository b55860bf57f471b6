#include "cdyn/parallel.hpp"

#include <algorithm>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cdyn::par {

namespace {

// Per-element expressions shared by the serial and parallel variants, so the
// two compile to the same arithmetic and stay bitwise identical.

inline double pgj_row(const Mat& A, const Vec& b,
                      const std::vector<unsigned char>& equality, double r,
                      const Vec& p_in, int i) {
  const double u_i = A.row(i).dot(p_in) + b(i);
  const double step = p_in(i) - r * u_i;
  const bool eq = !equality.empty() && equality[static_cast<size_t>(i)] != 0;
  return eq ? step : std::max(0.0, step);
}

inline double delassus_entry(const Mat& G, const Mat& W, double theta,
                             const std::vector<std::vector<int>>& row_support,
                             int i, int j) {
  if (row_support.empty())
    return theta * G.row(i).dot(W.col(j));
  double acc = 0.0;
  for (int c : row_support[static_cast<size_t>(i)]) acc += G(i, c) * W(c, j);
  return theta * acc;
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

void pgj_sweep_serial(const Mat& A, const Vec& b,
                      const std::vector<unsigned char>& equality, double r,
                      const Vec& p_in, Vec& p_out) {
  const int m = static_cast<int>(A.rows());
  p_out.resize(m);
  for (int i = 0; i < m; ++i) p_out(i) = pgj_row(A, b, equality, r, p_in, i);
}

void pgj_sweep_parallel(const Mat& A, const Vec& b,
                        const std::vector<unsigned char>& equality, double r,
                        const Vec& p_in, Vec& p_out) {
  const int m = static_cast<int>(A.rows());
  p_out.resize(m);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < m; ++i) p_out(i) = pgj_row(A, b, equality, r, p_in, i);
}

void delassus_fill_serial(const Mat& G, const Mat& W, double theta,
                          const std::vector<std::vector<int>>& row_support,
                          Mat& A) {
  const int m = static_cast<int>(A.rows());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      A(i, j) = delassus_entry(G, W, theta, row_support, i, j);
}

void delassus_fill_parallel(const Mat& G, const Mat& W, double theta,
                            const std::vector<std::vector<int>>& row_support,
                            Mat& A) {
  const int m = static_cast<int>(A.rows());
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      A(i, j) = delassus_entry(G, W, theta, row_support, i, j);
}

void row_batch_serial(const std::function<double(int)>& eval,
                      const std::vector<int>& ids, Vec& out) {
  const int n = static_cast<int>(ids.size());
  out.resize(n);
  for (int k = 0; k < n; ++k) out(k) = eval(ids[static_cast<size_t>(k)]);
}

void row_batch_parallel(const std::function<double(int)>& eval,
                        const std::vector<int>& ids, Vec& out) {
  const int n = static_cast<int>(ids.size());
  out.resize(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
  for (int k = 0; k < n; ++k) out(k) = eval(ids[static_cast<size_t>(k)]);
}

}  // namespace cdyn::par
