// Data-parallel kernels used by the solvers and the contact assembly, each in
// two variants: a serial reference and an OpenMP version.  Both variants
// compute every output element with the exact same expression (per-element
// work is independent, no cross-thread reductions), so their results are
// required to be bitwise identical; tests assert that.  Without OpenMP the
// parallel entry points degrade to the serial loop.
#pragma once

#include <functional>
#include <vector>

#include "cdyn/types.hpp"

namespace cdyn::par {

// Number of threads the parallel variants may use (1 without OpenMP).
int max_threads();
bool openmp_enabled();

// One projected Gauss-Jacobi sweep: for every row i,
//   p_out_i = max(0, p_in_i - r (A p_in + b)_i)
// with the projection skipped on equality rows.  Rows are independent.
void pgj_sweep_serial(const Mat& A, const Vec& b,
                      const std::vector<unsigned char>& equality, double r,
                      const Vec& p_in, Vec& p_out);
void pgj_sweep_parallel(const Mat& A, const Vec& b,
                        const std::vector<unsigned char>& equality, double r,
                        const Vec& p_in, Vec& p_out);

// Delassus-type product A = theta * G * W restricted to known row supports:
// row_support[i] lists the columns where G row i is nonzero (sorted).  Entries
// whose supports do not intersect are exact zeros and are skipped.  An empty
// support list means every row is dense.  A must be pre-sized m x m.
void delassus_fill_serial(const Mat& G, const Mat& W, double theta,
                          const std::vector<std::vector<int>>& row_support,
                          Mat& A);
void delassus_fill_parallel(const Mat& G, const Mat& W, double theta,
                            const std::vector<std::vector<int>>& row_support,
                            Mat& A);

// Batch evaluation of independent scalar rows (e.g. contact gaps): out[k] =
// eval(ids[k]).  eval must be pure; it is shared across threads.
void row_batch_serial(const std::function<double(int)>& eval,
                      const std::vector<int>& ids, Vec& out);
void row_batch_parallel(const std::function<double(int)>& eval,
                        const std::vector<int>& ids, Vec& out);

}  // namespace cdyn::par
