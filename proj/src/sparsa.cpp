#include "qmrom/sparsa.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmrom/errors.hpp"
#include "qmrom/kernels.hpp"
#include "qmrom/matio.hpp"

namespace qmrom {

void SparsaConfig::validate() const {
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i])) {
      throw ConfigError("SpaRSA lambda grid values must be positive and finite");
    }
    if (i > 0 && !(lambda_grid[i] < lambda_grid[i - 1])) {
      throw ConfigError("SpaRSA lambda grid must be strictly descending");
    }
  }
  if (!(eps_tol > 0.0)) throw ConfigError("SpaRSA eps_tol must be positive");
  if (max_iters < 1) throw ConfigError("SpaRSA max_iters must be at least 1");
  if (max_backtracks < 0) throw ConfigError("SpaRSA max_backtracks must be non-negative");
}

Matrix group_prox(const Matrix& r_alpha, double alpha, double lambda) {
  if (!(alpha > 0.0)) throw ValidationError("group_prox: alpha must be positive");
  if (!(lambda >= 0.0)) throw ValidationError("group_prox: lambda must be non-negative");
  Matrix out;
  kernels::parallel::group_prox(r_alpha, alpha * lambda, out);
  return out;
}

double spectral_norm_squared(const Matrix& W, int max_iters) {
  if (W.size() == 0) return 0.0;
  const Matrix G = W * W.transpose();
  // Deterministic start with weight on every coordinate.
  Vector x = Vector::LinSpaced(G.rows(), 1.0, 2.0).normalized();
  double est = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector y = G * x;
    const double norm = y.norm();
    if (norm == 0.0) return 0.0;
    const double next = x.dot(y);
    x = y / norm;
    if (std::abs(next - est) <= 1e-12 * std::abs(next)) {
      est = next;
      break;
    }
    est = next;
  }
  return est;
}

std::vector<double> default_lambda_grid(const Matrix& W, const Matrix& E, int count,
                                        double ratio) {
  if (count < 1) throw ConfigError("lambda grid needs at least one value");
  Vector norms;
  kernels::parallel::row_norms(Matrix(W * E.transpose()), norms);
  const double lmax = norms.size() ? norms.maxCoeff() : 0.0;
  if (!(lmax > 0.0)) throw ValidationError("default lambda grid: W E^T is zero");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    grid[static_cast<std::size_t>(i)] = lmax * std::pow(ratio, t);
  }
  return grid;
}

namespace {

struct GramProblem {
  Matrix G;       // W W^T
  Matrix B;       // W E^T
  double c0 = 0;  // 1/2 |E|_F^2
};

double group_norm_sum(const Matrix& X) {
  Vector norms;
  kernels::parallel::row_norms(X, norms);
  return norms.sum();
}

// Smooth part 1/2 tr(X^T G X) - tr(X^T B) + c0, given GX = G X.
double smooth_part(const GramProblem& p, const Matrix& X, const Matrix& GX) {
  return 0.5 * X.cwiseProduct(GX).sum() - X.cwiseProduct(p.B).sum() + p.c0;
}

std::vector<Index> support(const Matrix& X) {
  std::vector<Index> out;
  for (Index i = 0; i < X.rows(); ++i) {
    if (X.row(i).squaredNorm() > 0.0) out.push_back(i);
  }
  return out;
}

void update_monotone(SparsaResult& r) {
  r.support_monotone = true;
  for (std::size_t i = 1; i < r.selected.size(); ++i) {
    if (r.selected[i].size() < r.selected[i - 1].size()) r.support_monotone = false;
  }
}

}  // namespace

double sparsa_objective(const Matrix& W, const Matrix& E, const Matrix& X, double lambda) {
  const Matrix R = E - X.transpose() * W;
  return 0.5 * R.squaredNorm() + lambda * group_norm_sum(X);
}

SparsaResult sparsa_solve(const Matrix& W, const Matrix& E, SparsaConfig cfg) {
  if (W.cols() != E.cols()) {
    throw SizeError("sparsa_solve: W and E must have the same number of columns");
  }
  if (cfg.lambda_grid.empty()) cfg.lambda_grid = default_lambda_grid(W, E);
  if (!(cfg.alpha_bar > 0.0)) {
    const double L = spectral_norm_squared(W);
    if (!(L > 0.0)) throw ValidationError("sparsa_solve: W is zero");
    cfg.alpha_bar = 1.0 / L;
  }
  if (!(cfg.alpha_floor > 0.0)) cfg.alpha_floor = 1e-12 * cfg.alpha_bar;
  cfg.validate();

  GramProblem p{W * W.transpose(), W * E.transpose(), 0.5 * E.squaredNorm()};
  SparsaResult result;
  result.alpha_bar = cfg.alpha_bar;

  Matrix X = Matrix::Zero(W.rows(), E.rows());
  if (cfg.warm_start.size() > 0) {
    if (cfg.warm_start.rows() != X.rows() || cfg.warm_start.cols() != X.cols()) {
      throw SizeError("sparsa_solve: warm start must be q x n");
    }
    X = cfg.warm_start;
  }
  Matrix GX = p.G * X;
  for (double lambda : cfg.lambda_grid) {
    std::vector<double> trace;
    SparsaLambdaStats stats;
    double F = smooth_part(p, X, GX) + lambda * group_norm_sum(X);
    trace.push_back(F);
    double alpha = cfg.alpha_bar;

    for (int k = 0; k < cfg.max_iters; ++k) {
      const Matrix grad = GX - p.B;
      Matrix Xn, GXn;
      double Fn = 0.0;
      int backtracks = 0;
      bool accepted = false;
      while (true) {
        Xn = group_prox(X - alpha * grad, alpha, lambda);
        GXn = p.G * Xn;
        Fn = smooth_part(p, Xn, GXn) + lambda * group_norm_sum(Xn);
        if ((Xn.array() == X.array()).all()) break;
        if (Fn < F) {
          accepted = true;
          break;
        }
        if (backtracks >= cfg.max_backtracks || alpha < cfg.alpha_floor) break;
        alpha *= 0.5;
        ++backtracks;
      }
      if (!accepted && (Xn.array() == X.array()).all()) {
        stats.iterations = k;
        stats.converged = true;
        break;
      }
      if (!accepted) {
        if (alpha >= cfg.alpha_floor && !(Fn <= F)) {
          std::ostringstream msg;
          msg << "sparsa_solve: objective increased after " << backtracks
              << " backtracks at lambda=" << lambda << " (F=" << F << ", trial F=" << Fn << ")";
          throw SolverError(msg.str());
        }
        // Stalled at the step floor: keep the trial only if it is no worse.
        ++stats.floor_events;
        if (Fn <= F) {
          X = std::move(Xn);
          GX = std::move(GXn);
          F = Fn;
          trace.push_back(F);
        }
        stats.converged = true;
        break;
      }
      X = std::move(Xn);
      GX = std::move(GXn);
      F = Fn;
      trace.push_back(F);
      stats.iterations = k + 1;
      alpha = std::min(1.5 * alpha, cfg.alpha_bar);
      const std::size_t m = trace.size();
      if (m > 6) {
        const double old = trace[m - 6];
        if ((old - F) <= cfg.eps_tol * std::abs(old)) {
          stats.converged = true;
          break;
        }
      }
    }

    result.lambdas.push_back(lambda);
    result.vbar_path.push_back(X.transpose());
    result.selected.push_back(support(X));
    result.objective_trace.push_back(std::move(trace));
    result.stats.push_back(stats);
  }
  update_monotone(result);
  return result;
}

SparsaResult sparsa_solve_for_target(const Matrix& W, const Matrix& E, SparsaConfig cfg,
                                     Index q_target, int refinements) {
  SparsaResult res = sparsa_solve(W, E, cfg);
  cfg.alpha_bar = res.alpha_bar;
  for (int it = 0; it < refinements; ++it) {
    // First grid step whose support overshoots the target from below it.
    std::size_t hi = res.selected.size();
    for (std::size_t i = 1; i < res.selected.size(); ++i) {
      const auto before = static_cast<Index>(res.selected[i - 1].size());
      const auto after = static_cast<Index>(res.selected[i].size());
      if (before < q_target && after > q_target) {
        hi = i;
        break;
      }
      if (after == q_target) break;
    }
    if (hi == res.selected.size()) break;
    const double lo_lambda = res.lambdas[hi - 1], hi_lambda = res.lambdas[hi];
    const double mid = std::sqrt(lo_lambda * hi_lambda);
    if (!(mid < lo_lambda && mid > hi_lambda)) break;
    SparsaConfig sub = cfg;
    sub.lambda_grid = {mid};
    sub.warm_start = res.vbar_path[hi - 1].transpose();
    SparsaResult one = sparsa_solve(W, E, sub);
    const auto at = static_cast<std::ptrdiff_t>(hi);
    res.lambdas.insert(res.lambdas.begin() + at, mid);
    res.vbar_path.insert(res.vbar_path.begin() + at, std::move(one.vbar_path[0]));
    res.selected.insert(res.selected.begin() + at, std::move(one.selected[0]));
    res.objective_trace.insert(res.objective_trace.begin() + at,
                               std::move(one.objective_trace[0]));
    res.stats.insert(res.stats.begin() + at, one.stats[0]);
  }
  update_monotone(res);
  return res;
}

std::vector<Index> select_columns(const SparsaResult& result, Index q_target) {
  if (result.selected.empty()) throw ValidationError("select_columns: empty SpaRSA result");
  if (q_target < 0) throw ValidationError("select_columns: q_target must be non-negative");
  // Lambdas are descending, so strict comparisons keep the largest lambda on ties.
  std::size_t best = result.selected.size();
  for (std::size_t i = 0; i < result.selected.size(); ++i) {
    const auto size = static_cast<Index>(result.selected[i].size());
    if (size <= q_target &&
        (best == result.selected.size() ||
         size > static_cast<Index>(result.selected[best].size()))) {
      best = i;
    }
  }
  if (best == result.selected.size()) {
    best = 0;
    for (std::size_t i = 1; i < result.selected.size(); ++i) {
      if (result.selected[i].size() < result.selected[best].size()) best = i;
    }
  }
  return result.selected[best];
}

QuadraticManifold debias(const PodBasis& pod, const Matrix& shifted,
                         const QuadFeatureMap& selected, double gamma) {
  if (selected.q() == 0) throw ValidationError("debias: no selected columns");
  return fit_vbar(pod, shifted, selected, gamma);
}

void write_sparsa_trace_csv(const SparsaResult& result, const std::filesystem::path& path) {
  std::string out = "lambda,iteration,objective,support_size\n";
  for (std::size_t i = 0; i < result.lambdas.size(); ++i) {
    const auto& trace = result.objective_trace[i];
    for (std::size_t k = 0; k < trace.size(); ++k) {
      out += matio::format_double(result.lambdas[i]) + "," + std::to_string(k) + "," +
             matio::format_double(trace[k]) + "," + std::to_string(result.selected[i].size()) +
             "\n";
    }
  }
  matio::write_file_atomic(path, out);
}

}  // namespace qmrom
