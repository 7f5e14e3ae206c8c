#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "qmrom/manifold.hpp"

// Group-sparse selection of quadratic features. The regularization weight
// lambda_group plays the role of gamma in the sum-of-l2 problem
//   min 1/2 |E - Vbar W|_F^2 + lambda_group sum_j |vbar_j|_2.
namespace qmrom {

struct SparsaConfig {
  std::vector<double> lambda_grid;  // descending; empty means default grid
  double alpha_bar = 0.0;           // <= 0 means 1 / |W|_2^2
  double eps_tol = 1e-6;
  int max_iters = 5000;
  int max_backtracks = 50;
  double alpha_floor = 0.0;         // <= 0 means 1e-12 * alpha_bar
  Matrix warm_start;                // X = Vbar^T at the first lambda; empty means zero

  void validate() const;
};

struct SparsaLambdaStats {
  int iterations = 0;
  int floor_events = 0;
  bool converged = false;
};

struct SparsaResult {
  std::vector<double> lambdas;
  std::vector<Matrix> vbar_path;                // each n x q
  std::vector<std::vector<Index>> selected;     // nonzero columns per lambda
  std::vector<std::vector<double>> objective_trace;
  std::vector<SparsaLambdaStats> stats;
  double alpha_bar = 0.0;
  // Whether support sizes grow as lambda shrinks. Reported only.
  bool support_monotone = true;
};

// Row-wise prox of alpha * lambda * sum |row|_2.
Matrix group_prox(const Matrix& r_alpha, double alpha, double lambda);

// Largest eigenvalue of W W^T by power iteration.
double spectral_norm_squared(const Matrix& W, int max_iters = 200);

std::vector<double> default_lambda_grid(const Matrix& W, const Matrix& E,
                                        int count = 20, double ratio = 1e-4);

// 1/2 |E - X^T W|_F^2 + lambda sum |row_j(X)|, with X = Vbar^T (q x n).
double sparsa_objective(const Matrix& W, const Matrix& E, const Matrix& X,
                        double lambda);

SparsaResult sparsa_solve(const Matrix& W, const Matrix& E, SparsaConfig cfg);

// Path solve followed by geometric bisection of the grid interval where the
// support first jumps past q_target, so that smaller supports the coarse grid
// steps over can surface. Each inserted lambda is warm started.
SparsaResult sparsa_solve_for_target(const Matrix& W, const Matrix& E, SparsaConfig cfg,
                                     Index q_target, int refinements = 40);

// Support of the largest lambda whose size is <= q_target; when no support
// is small enough, the smallest one available.
std::vector<Index> select_columns(const SparsaResult& result, Index q_target);

QuadraticManifold debias(const PodBasis& pod, const Matrix& shifted,
                         const QuadFeatureMap& selected, double gamma);

// lambda,iteration,objective rows plus a support table.
void write_sparsa_trace_csv(const SparsaResult& result,
                            const std::filesystem::path& path);

}  // namespace qmrom
