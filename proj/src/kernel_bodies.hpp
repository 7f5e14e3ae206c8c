#pragma once

// Per-element bodies shared by the serial and parallel kernels so both
// perform exactly the same floating-point operations.

#include <cmath>

#include "qmrom/kernels.hpp"

namespace qmrom::kernels::detail {

inline void feature_column(const Matrix& shat, const std::vector<IndexPair>& pairs, Index j,
                           Matrix& out) {
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    out(static_cast<Index>(m), j) = shat(pairs[m].first, j) * shat(pairs[m].second, j);
  }
}

inline void laplacian_row(const Vector& u, Index nx, Index ny, double ihx2, double ihy2,
                          Index iy, Vector& out) {
  const Index ym = iy == 0 ? iy : iy - 1;
  const Index yp = iy == ny - 1 ? iy : iy + 1;
  for (Index ix = 0; ix < nx; ++ix) {
    const Index xm = ix == 0 ? ix : ix - 1;
    const Index xp = ix == nx - 1 ? ix : ix + 1;
    const double c = u[iy * nx + ix];
    out[iy * nx + ix] = (u[iy * nx + xm] - 2.0 * c + u[iy * nx + xp]) * ihx2 +
                        (u[ym * nx + ix] - 2.0 * c + u[yp * nx + ix]) * ihy2;
  }
}

inline double row_norm(const Matrix& m, Index i) {
  double s = 0.0;
  for (Index j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline void prox_row(const Matrix& r, double threshold, Index i, Matrix& out) {
  const double norm = row_norm(r, i);
  if (norm <= threshold) {
    out.row(i).setZero();
    return;
  }
  const double scale = 1.0 - threshold / norm;
  for (Index j = 0; j < r.cols(); ++j) out(i, j) = scale * r(i, j);
}

inline void solve_column(const Eigen::LLT<Matrix>& llt, const Matrix& rhs, Index j,
                         Matrix& out) {
  Vector x = rhs.col(j);
  llt.solveInPlace(x);
  out.col(j) = x;
}

}  // namespace qmrom::kernels::detail
