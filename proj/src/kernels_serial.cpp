#include "kernel_bodies.hpp"
#include "qmrom/errors.hpp"

namespace qmrom::kernels {

void decode_into(const Vector& s_ref, const Matrix& V, const Matrix& vbar,
                 const std::vector<IndexPair>& pairs, const Eigen::Ref<const Vector>& shat,
                 Eigen::Ref<Vector> out) {
  const Index n = V.rows();
  for (Index i = 0; i < n; ++i) out[i] = s_ref[i];
  for (Index c = 0; c < V.cols(); ++c) {
    const double a = shat[c];
    const double* col = V.data() + c * n;
    for (Index i = 0; i < n; ++i) out[i] += col[i] * a;
  }
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    const double w = shat[pairs[m].first] * shat[pairs[m].second];
    const double* col = vbar.data() + static_cast<Index>(m) * n;
    for (Index i = 0; i < n; ++i) out[i] += col[i] * w;
  }
}

namespace serial {

void quad_feature_matrix(const Matrix& shat, const std::vector<IndexPair>& pairs, Matrix& out) {
  out.resize(static_cast<Index>(pairs.size()), shat.cols());
  for (Index j = 0; j < shat.cols(); ++j) detail::feature_column(shat, pairs, j, out);
}

void neumann_laplacian(const Vector& u, Index nx, Index ny, double hx, double hy, Vector& out) {
  if (u.size() != nx * ny) throw SizeError("neumann_laplacian: field size mismatch");
  out.resize(u.size());
  const double ihx2 = 1.0 / (hx * hx);
  const double ihy2 = 1.0 / (hy * hy);
  for (Index iy = 0; iy < ny; ++iy) detail::laplacian_row(u, nx, ny, ihx2, ihy2, iy, out);
}

void group_prox(const Matrix& r, double threshold, Matrix& out) {
  out.resize(r.rows(), r.cols());
  for (Index i = 0; i < r.rows(); ++i) detail::prox_row(r, threshold, i, out);
}

void row_norms(const Matrix& m, Vector& out) {
  out.resize(m.rows());
  for (Index i = 0; i < m.rows(); ++i) out[i] = detail::row_norm(m, i);
}

void ridge_column_solve(const Eigen::LLT<Matrix>& llt, const Matrix& rhs, Matrix& out) {
  out.resize(rhs.rows(), rhs.cols());
  for (Index j = 0; j < rhs.cols(); ++j) detail::solve_column(llt, rhs, j, out);
}

void decode_columns(const Vector& s_ref, const Matrix& V, const Matrix& vbar,
                    const std::vector<IndexPair>& pairs, const Matrix& shat, Matrix& out) {
  out.resize(V.rows(), shat.cols());
  for (Index j = 0; j < shat.cols(); ++j) decode_into(s_ref, V, vbar, pairs, shat.col(j), out.col(j));
}

}  // namespace serial
}  // namespace qmrom::kernels
