#include "qmrom/opinf.hpp"

#include <cmath>
#include <string>
#include <tuple>

#include "qmrom/errors.hpp"

namespace qmrom {

void RomOperators::validate() const {
  const Index r = A_hat.rows();
  if (A_hat.cols() != r) throw ValidationError("A_hat must be square");
  if (c_hat.size() != r) throw ValidationError("c_hat length does not match A_hat");
  fmap.validate();
  if (fmap.r != r) throw ValidationError("operator feature map r does not match A_hat");
  if (H_hat.rows() != r || H_hat.cols() != fmap.q()) {
    throw ValidationError("H_hat is " + std::to_string(H_hat.rows()) + "x" +
                          std::to_string(H_hat.cols()) + ", expected " + std::to_string(r) + "x" +
                          std::to_string(fmap.q()));
  }
  if (time_order != 1 && time_order != 2) throw ValidationError("time_order must be 1 or 2");
  if (!all_finite(c_hat) || !all_finite(A_hat) || !all_finite(H_hat)) {
    throw ValidationError("operators contain non-finite values");
  }
}

void OpinfProblem::validate() const {
  if (shat.rows() != fmap.r) throw SizeError("opinf: reduced states do not have r rows");
  if (dhat.rows() != shat.rows() || dhat.cols() != shat.cols()) {
    throw SizeError("opinf: derivative matrix shape does not match the reduced states");
  }
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ValidationError("opinf: regularization weights must be non-negative");
  }
  if (time_order != 1 && time_order != 2) throw ValidationError("opinf: time_order must be 1 or 2");
  fmap.validate();
}

Matrix opinf_data_matrix(const Matrix& shat, const QuadFeatureMap& fmap) {
  const Index r = shat.rows();
  Matrix D(1 + r + fmap.q(), shat.cols());
  D.row(0).setOnes();
  D.middleRows(1, r) = shat;
  if (fmap.q() > 0) D.bottomRows(fmap.q()) = quad_feature_matrix(shat, fmap);
  return D;
}

namespace {

Vector block_weights(Index r, Index q, double lambda1, double lambda2) {
  Vector weights(1 + r + q);
  weights.head(1 + r).setConstant(lambda1);
  weights.tail(q).setConstant(lambda2);
  return weights;
}

RomOperators unpack(const Matrix& O, const QuadFeatureMap& fmap, int time_order) {
  const Index r = fmap.r;
  RomOperators ops;
  ops.c_hat = O.row(0).transpose();
  ops.A_hat = O.middleRows(1, r).transpose();
  ops.H_hat = O.bottomRows(fmap.q()).transpose();
  ops.fmap = fmap;
  ops.time_order = time_order;
  return ops;
}

RomOperators solve(const OpinfProblem& p, RowSolve mode) {
  p.validate();
  const Index r = p.shat.rows();
  const Index q = p.fmap.q();
  const Matrix D = opinf_data_matrix(p.shat, p.fmap);
  const Vector weights = block_weights(r, q, p.lambda1, p.lambda2);

  // Column i of O holds row i of [c A H].
  Matrix O(1 + r + q, r);
  if (mode == RowSolve::joint) {
    O = solve_ridge_rows_weighted(D, p.dhat.transpose(), weights);
  } else {
    for (Index i = 0; i < r; ++i) {
      O.col(i) = solve_ridge_rows_weighted(D, p.dhat.row(i).transpose(), weights);
    }
  }
  return unpack(O, p.fmap, p.time_order);
}

}  // namespace

RomOperators infer_linear(const OpinfProblem& problem, RowSolve mode) {
  if (problem.fmap.q() != 0) throw ValidationError("infer_linear: feature map must be empty");
  return solve(problem, mode);
}

RomOperators infer_quadratic(const OpinfProblem& problem, RowSolve mode) {
  return solve(problem, mode);
}

OpinfGram opinf_gram(const OpinfProblem& problem) {
  problem.validate();
  const Matrix D = opinf_data_matrix(problem.shat, problem.fmap);
  return {D * D.transpose(), D * problem.dhat.transpose(), problem.fmap, problem.time_order};
}

RomOperators solve_opinf_gram(const OpinfGram& gram, double lambda1, double lambda2) {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0)) {
    throw ValidationError("opinf: regularization weights must be non-negative");
  }
  const Matrix O = solve_ridge_gram(gram.G, gram.B,
                                    block_weights(gram.fmap.r, gram.fmap.q(), lambda1, lambda2));
  return unpack(O, gram.fmap, gram.time_order);
}

RomOperators intrusive_galerkin(const Matrix& A_full, const QuadraticManifold& m,
                                int time_order) {
  m.validate();
  if (A_full.rows() != m.n() || A_full.cols() != m.n()) {
    throw SizeError("intrusive_galerkin: operator is " + std::to_string(A_full.rows()) + "x" +
                    std::to_string(A_full.cols()) + ", expected " + std::to_string(m.n()) +
                    " square");
  }
  const Matrix& V = m.pod.V;
  RomOperators ops;
  ops.c_hat = V.transpose() * (A_full * m.pod.s_ref);
  ops.A_hat = V.transpose() * (A_full * V);
  ops.H_hat = V.transpose() * (A_full * m.vbar);
  ops.fmap = m.fmap;
  ops.time_order = time_order;
  return ops;
}

SweepResult sweep_hyperparameters(const std::vector<double>& gamma_grid,
                                  const std::vector<double>& lambda1_grid,
                                  const std::vector<double>& lambda2_grid,
                                  const SweepEvaluator& evaluate) {
  if (gamma_grid.empty() || lambda1_grid.empty() || lambda2_grid.empty()) {
    throw ConfigError("hyperparameter sweep needs non-empty grids");
  }
  SweepResult result;
  for (double g : gamma_grid) {
    for (double l1 : lambda1_grid) {
      for (double l2 : lambda2_grid) result.table.push_back({{g, l1, l2}, 0.0, false, {}});
    }
  }

  const auto count = static_cast<long long>(result.table.size());
#pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < count; ++i) {
    auto& entry = result.table[static_cast<std::size_t>(i)];
    try {
      auto err = evaluate(entry.hp);
      if (err && std::isfinite(*err)) {
        entry.error = *err;
        entry.stable = true;
      } else {
        entry.note = "unstable";
      }
    } catch (const std::exception& e) {
      entry.note = e.what();
    }
  }

  const SweepEntry* best = nullptr;
  auto key = [](const Hyperparameters& h) { return std::tuple(h.gamma, h.lambda1, h.lambda2); };
  for (const auto& e : result.table) {
    if (!e.stable) continue;
    if (!best || e.error < best->error - 1e-12 ||
        (std::abs(e.error - best->error) <= 1e-12 && key(e.hp) > key(best->hp))) {
      best = &e;
    }
  }
  if (!best) {
    std::string msg = "every sweep candidate failed:";
    for (const auto& e : result.table) {
      msg += " [gamma=" + std::to_string(e.hp.gamma) + " lambda1=" + std::to_string(e.hp.lambda1) +
             " lambda2=" + std::to_string(e.hp.lambda2) + ": " + e.note + "]";
    }
    throw InstabilityError(msg);
  }
  result.best = best->hp;
  result.best_error = best->error;
  return result;
}

}  // namespace qmrom
