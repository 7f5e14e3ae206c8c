#pragma once

#include <array>

#include "qmrom/types.hpp"

namespace qmrom {

struct SvdResult {
  Matrix U;                // n x p
  Vector singular_values;  // p, descending
  Matrix Vt;               // p x k
};

// Thin SVD with p = min(n, k). Each left singular vector is flipped so its
// largest-magnitude entry is positive; the matching row of Vt follows.
SvdResult thin_svd(const Matrix& a);

// Gram matrices whose condition estimate exceeds this are rejected when
// no regularization is applied.
inline constexpr double kConditionLimit = 1e12;

// Condition number of a symmetric positive semi-definite matrix.
double spd_condition(const Matrix& g);

// X = (w w^T + gamma I)^{-1} w targets, the minimizer of
// 1/2 |w^T X - targets|_F^2 + gamma/2 |X|_F^2.
Matrix solve_ridge_rows(const Matrix& w, const Matrix& targets, double gamma);

// Same with a per-feature penalty, X = (w w^T + diag(weights))^{-1} w targets.
Matrix solve_ridge_rows_weighted(const Matrix& w, const Matrix& targets,
                                 const Vector& weights);

// Ridge solve from precomputed G = w w^T and B = w targets.
Matrix solve_ridge_gram(const Matrix& G, const Matrix& B, const Vector& weights);

struct StencilSpec {
  int derivative_order = 2;
  int accuracy_order = 4;
  std::array<double, 5> interior{};
  // boundary[0] serves column 0, boundary[1] column 1, both over points 0..5.
  std::array<std::array<double, 6>, 2> boundary{};

  static StencilSpec first_derivative();
  static StencilSpec second_derivative();
};

// Time derivative of every row of series (n x k), k >= 6.
Matrix fd_derivative(const Matrix& series, double dt, const StencilSpec& spec);

}  // namespace qmrom
