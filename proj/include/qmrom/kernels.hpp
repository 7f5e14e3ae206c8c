#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "qmrom/types.hpp"

// Hot loops in two flavours: serial:: is the reference, parallel:: uses
// OpenMP. Both perform identical per-element arithmetic so their results
// agree bit for bit regardless of thread count.
namespace qmrom::kernels {

namespace serial {

// out(m, j) = shat(i_m, j) * shat(j_m, j).
void quad_feature_matrix(const Matrix& shat, const std::vector<IndexPair>& pairs,
                         Matrix& out);

// 5-point Laplacian on a cell-centred nx x ny grid (x fastest) with
// mirrored ghost cells, i.e. homogeneous Neumann boundaries.
void neumann_laplacian(const Vector& u, Index nx, Index ny, double hx, double hy,
                       Vector& out);

// Row-wise block soft threshold: rows with norm <= threshold become zero.
void group_prox(const Matrix& r, double threshold, Matrix& out);

// Euclidean norm of every row.
void row_norms(const Matrix& m, Vector& out);

// Solve the factored system for each column of rhs independently.
void ridge_column_solve(const Eigen::LLT<Matrix>& llt, const Matrix& rhs,
                        Matrix& out);

// out.col(j) = s_ref + V shat.col(j) + Vbar w(shat.col(j)).
void decode_columns(const Vector& s_ref, const Matrix& V, const Matrix& vbar,
                    const std::vector<IndexPair>& pairs, const Matrix& shat,
                    Matrix& out);

}  // namespace serial

namespace parallel {

void quad_feature_matrix(const Matrix& shat, const std::vector<IndexPair>& pairs,
                         Matrix& out);
void neumann_laplacian(const Vector& u, Index nx, Index ny, double hx, double hy,
                       Vector& out);
void group_prox(const Matrix& r, double threshold, Matrix& out);
void row_norms(const Matrix& m, Vector& out);
void ridge_column_solve(const Eigen::LLT<Matrix>& llt, const Matrix& rhs,
                        Matrix& out);
void decode_columns(const Vector& s_ref, const Matrix& V, const Matrix& vbar,
                    const std::vector<IndexPair>& pairs, const Matrix& shat,
                    Matrix& out);

}  // namespace parallel

// Single-column decode shared by both flavours.
void decode_into(const Vector& s_ref, const Matrix& V, const Matrix& vbar,
                 const std::vector<IndexPair>& pairs,
                 const Eigen::Ref<const Vector>& shat, Eigen::Ref<Vector> out);

}  // namespace qmrom::kernels
