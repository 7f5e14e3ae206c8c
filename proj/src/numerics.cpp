#include "qmrom/numerics.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <string>

#include "qmrom/errors.hpp"
#include "qmrom/kernels.hpp"

namespace qmrom {

SvdResult thin_svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0) throw SizeError("thin_svd: empty matrix");
  if (!all_finite(a)) throw ValidationError("thin_svd: input contains non-finite values");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw SolverError("thin_svd: decomposition failed");

  SvdResult out{svd.matrixU(), svd.singularValues(), svd.matrixV().transpose()};
  for (Index j = 0; j < out.U.cols(); ++j) {
    Index imax = 0;
    out.U.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.U(imax, j) < 0.0) {
      out.U.col(j) *= -1.0;
      out.Vt.row(j) *= -1.0;
    }
  }
  return out;
}

double spd_condition(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  double lo = eig.eigenvalues().minCoeff();
  double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

Matrix solve_ridge_gram(const Matrix& G, const Matrix& B, const Vector& weights) {
  const Index q = G.rows();
  if (G.cols() != q || B.rows() != q) throw SizeError("solve_ridge_gram: shape mismatch");
  if (weights.size() != q) throw SizeError("solve_ridge_rows: weight count mismatch");
  if ((weights.array() < 0.0).any() || !weights.allFinite()) {
    throw ValidationError("solve_ridge_rows: regularization weights must be finite and >= 0");
  }
  if (q == 0) return Matrix::Zero(0, B.cols());

  Matrix reg = G;
  reg.diagonal() += weights;
  if (weights.minCoeff() == 0.0) {
    double cond = spd_condition(reg);
    if (!(cond < kConditionLimit)) {
      throw IllConditionedError(
          "normal equations are singular or ill-conditioned (condition estimate " +
          (std::isfinite(cond) ? std::to_string(cond) : std::string("inf")) +
          " >= 1e12); use a positive regularization weight");
    }
  }
  Eigen::LLT<Matrix> llt(reg);
  if (llt.info() != Eigen::Success) {
    throw IllConditionedError(
        "normal equations are not positive definite; use a positive regularization weight");
  }
  Matrix X(q, B.cols());
  kernels::parallel::ridge_column_solve(llt, B, X);
  return X;
}

Matrix solve_ridge_rows_weighted(const Matrix& w, const Matrix& targets,
                                 const Vector& weights) {
  if (w.cols() != targets.rows()) {
    throw SizeError("solve_ridge_rows: w has " + std::to_string(w.cols()) +
                    " samples but targets has " + std::to_string(targets.rows()) + " rows");
  }
  if (weights.size() != w.rows()) throw SizeError("solve_ridge_rows: weight count mismatch");
  if (w.rows() == 0) return Matrix::Zero(0, targets.cols());
  return solve_ridge_gram(w * w.transpose(), w * targets, weights);
}

Matrix solve_ridge_rows(const Matrix& w, const Matrix& targets, double gamma) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("solve_ridge_rows: gamma must be finite and >= 0");
  }
  return solve_ridge_rows_weighted(w, targets, Vector::Constant(w.rows(), gamma));
}

// One-sided coefficients solve the Vandermonde system for the six points
// 0..5 around the target column; tests rebuild them from scratch.
StencilSpec StencilSpec::first_derivative() {
  StencilSpec s;
  s.derivative_order = 1;
  s.interior = {1.0, -8.0, 0.0, 8.0, -1.0};
  for (auto& c : s.interior) c /= 12.0;
  s.boundary[0] = {-137.0 / 60.0, 5.0, -5.0, 10.0 / 3.0, -5.0 / 4.0, 1.0 / 5.0};
  s.boundary[1] = {-1.0 / 5.0, -13.0 / 12.0, 2.0, -1.0, 1.0 / 3.0, -1.0 / 20.0};
  return s;
}

StencilSpec StencilSpec::second_derivative() {
  StencilSpec s;
  s.derivative_order = 2;
  s.interior = {-1.0, 16.0, -30.0, 16.0, -1.0};
  for (auto& c : s.interior) c /= 12.0;
  s.boundary[0] = {15.0 / 4.0, -77.0 / 6.0, 107.0 / 6.0, -13.0, 61.0 / 12.0, -5.0 / 6.0};
  s.boundary[1] = {5.0 / 6.0, -5.0 / 4.0, -1.0 / 3.0, 7.0 / 6.0, -1.0 / 2.0, 1.0 / 12.0};
  return s;
}

Matrix fd_derivative(const Matrix& series, double dt, const StencilSpec& spec) {
  const Index k = series.cols();
  if (k < 6) throw SizeError("fd_derivative: need at least 6 samples, got " + std::to_string(k));
  if (!(dt > 0.0)) throw ValidationError("fd_derivative: dt must be positive");
  if (spec.derivative_order != 1 && spec.derivative_order != 2) {
    throw ValidationError("fd_derivative: derivative order must be 1 or 2");
  }
  const double scale = 1.0 / std::pow(dt, spec.derivative_order);
  // Mirrored one-sided stencils change sign for odd derivatives.
  const double mirror = spec.derivative_order == 1 ? -1.0 : 1.0;

  Matrix out = Matrix::Zero(series.rows(), k);
  for (Index j = 2; j + 2 < k; ++j) {
    for (int m = 0; m < 5; ++m) {
      if (spec.interior[m] != 0.0) out.col(j) += spec.interior[m] * series.col(j - 2 + m);
    }
  }
  for (int b = 0; b < 2; ++b) {
    for (int m = 0; m < 6; ++m) {
      out.col(b) += spec.boundary[b][m] * series.col(m);
      out.col(k - 1 - b) += mirror * spec.boundary[b][m] * series.col(k - 1 - m);
    }
  }
  out *= scale;
  return out;
}

}  // namespace qmrom
