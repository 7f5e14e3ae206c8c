#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmrom/manifold.hpp"

namespace qmrom {

struct RomOperators {
  Vector c_hat;  // r
  Matrix A_hat;  // r x r
  Matrix H_hat;  // r x q, zero columns when there is no quadratic term
  QuadFeatureMap fmap;
  int time_order = 1;

  Index r() const { return A_hat.rows(); }
  bool has_quadratic() const { return H_hat.cols() > 0; }
  void validate() const;
};

struct OpinfProblem {
  Matrix shat;  // r x k
  Matrix dhat;  // r x k, first or second time derivative
  QuadFeatureMap fmap;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  int time_order = 1;

  void validate() const;
};

enum class RowSolve { joint, per_row };

// [1; shat; w(shat)], (1 + r + q) x k.
Matrix opinf_data_matrix(const Matrix& shat, const QuadFeatureMap& fmap);

RomOperators infer_linear(const OpinfProblem& problem,
                          RowSolve mode = RowSolve::joint);
RomOperators infer_quadratic(const OpinfProblem& problem,
                             RowSolve mode = RowSolve::joint);

// Normal equations of an opinf problem, shared by solves that differ only
// in their regularization weights.
struct OpinfGram {
  Matrix G;  // D D^T
  Matrix B;  // D dhat^T
  QuadFeatureMap fmap;
  int time_order = 1;
};

OpinfGram opinf_gram(const OpinfProblem& problem);
RomOperators solve_opinf_gram(const OpinfGram& gram, double lambda1, double lambda2);

// c = V^T A s_ref, A = V^T A V, H = V^T A Vbar.
RomOperators intrusive_galerkin(const Matrix& A_full, const QuadraticManifold& m,
                                int time_order = 1);

struct Hyperparameters {
  double gamma = 0.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
};

struct SweepEntry {
  Hyperparameters hp;
  double error = 0.0;
  bool stable = false;
  std::string note;
};

struct SweepResult {
  Hyperparameters best;
  double best_error = 0.0;
  std::vector<SweepEntry> table;
};

// Returns the training error, or nullopt when the candidate is unstable.
using SweepEvaluator = std::function<std::optional<double>(const Hyperparameters&)>;

// Exhaustive search over the grid product. Candidates within 1e-12 of the
// best error are resolved toward larger (gamma, lambda1, lambda2).
SweepResult sweep_hyperparameters(const std::vector<double>& gamma_grid,
                                  const std::vector<double>& lambda1_grid,
                                  const std::vector<double>& lambda2_grid,
                                  const SweepEvaluator& evaluate);

}  // namespace qmrom
