#include "qmrom/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qmrom/errors.hpp"
#include "qmrom/kernels.hpp"

namespace qmrom {

void SnapshotSet::validate() const {
  if (k() < 2) throw ValidationError("snapshot set needs at least 2 columns");
  if (times.size() != k()) throw ValidationError("snapshot times do not match the column count");
  if (!params.empty() && static_cast<Index>(params.size()) != k()) {
    throw ValidationError("snapshot parameter labels do not match the column count");
  }
  if (!all_finite(states) || !all_finite(times)) {
    throw ValidationError("snapshot data contains non-finite values");
  }
  if (derivatives) {
    if (derivatives->rows() != n() || derivatives->cols() != k()) {
      throw ValidationError("derivative matrix shape does not match the snapshots");
    }
    if (derivative_order != 1 && derivative_order != 2) {
      throw ValidationError("derivative order must be 1 or 2");
    }
    if (!all_finite(*derivatives)) throw ValidationError("derivatives contain non-finite values");
  }
  for (auto [b, e] : segments()) {
    for (Index j = b + 1; j < e; ++j) {
      if (!(times[j] > times[j - 1])) {
        throw ValidationError("snapshot times must increase within each trajectory");
      }
    }
  }
}

std::vector<std::pair<Index, Index>> SnapshotSet::segments() const {
  std::vector<std::pair<Index, Index>> out;
  if (params.empty()) {
    out.emplace_back(0, k());
    return out;
  }
  Index start = 0;
  for (Index j = 1; j <= k(); ++j) {
    if (j == k() || params[j] != params[start]) {
      out.emplace_back(start, j);
      start = j;
    }
  }
  return out;
}

QuadFeatureMap QuadFeatureMap::full(Index r) {
  QuadFeatureMap f;
  f.r = r;
  for (int i = 0; i < r; ++i) {
    for (int j = i; j < r; ++j) f.pairs.emplace_back(i, j);
  }
  return f;
}

QuadFeatureMap QuadFeatureMap::empty(Index r) {
  QuadFeatureMap f;
  f.r = r;
  return f;
}

QuadFeatureMap QuadFeatureMap::from_pairs(Index r, std::vector<IndexPair> pairs) {
  QuadFeatureMap f;
  f.r = r;
  f.pairs = std::move(pairs);
  f.validate();
  return f;
}

QuadFeatureMap QuadFeatureMap::subset(const std::vector<Index>& positions) const {
  QuadFeatureMap f;
  f.r = r;
  for (Index p : positions) {
    if (p < 0 || p >= q()) throw SizeError("feature position out of range");
    f.pairs.push_back(pairs[static_cast<std::size_t>(p)]);
  }
  f.validate();
  return f;
}

void QuadFeatureMap::validate() const {
  if (r < 0) throw ValidationError("feature map has negative r");
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    auto [i, j] = pairs[m];
    if (i < 0 || j < i || j >= r) {
      throw ValidationError("feature pair (" + std::to_string(i + 1) + "," +
                            std::to_string(j + 1) + ") outside 1 <= i <= j <= r");
    }
    if (m > 0 && !(pairs[m - 1] < pairs[m])) {
      throw ValidationError("feature pairs must be unique and lexicographically sorted");
    }
  }
}

void PodBasis::validate() const {
  if (s_ref.size() != V.rows()) throw ValidationError("reference state length does not match V");
  if (r() > singular_values.size()) {
    throw ValidationError("basis has more columns than stored singular values");
  }
  if (!all_finite(V) || !all_finite(s_ref) || !all_finite(singular_values)) {
    throw ValidationError("basis contains non-finite values");
  }
}

void QuadraticManifold::validate() const {
  pod.validate();
  fmap.validate();
  if (fmap.r != pod.r()) throw ValidationError("feature map r does not match the basis");
  if (vbar.rows() != pod.n() || vbar.cols() != fmap.q()) {
    throw ValidationError("Vbar is " + std::to_string(vbar.rows()) + "x" +
                          std::to_string(vbar.cols()) + ", expected " + std::to_string(pod.n()) +
                          "x" + std::to_string(fmap.q()));
  }
  if (!all_finite(vbar)) throw ValidationError("Vbar contains non-finite values");
}

CenteredData center(const Matrix& S, RefMode mode) {
  if (S.cols() < 1) throw SizeError("center: no snapshots");
  CenteredData out;
  out.ref_mode = mode;
  out.s_ref = mode == RefMode::initial ? Vector(S.col(0)) : Vector(S.rowwise().mean());
  out.shifted = S.colwise() - out.s_ref;
  return out;
}

PodBasis pod_from_svd(const SvdResult& svd, const Vector& s_ref, RefMode mode, Index r) {
  const Index p = svd.singular_values.size();
  if (r < 1 || r > p) {
    throw SizeError("basis size r=" + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
  }
  PodBasis b;
  b.V = svd.U.leftCols(r);
  b.singular_values = svd.singular_values;
  b.s_ref = s_ref;
  b.ref_mode = mode;
  return b;
}

PodBasis pod(const Matrix& shifted, Index r) {
  const Index p = std::min(shifted.rows(), shifted.cols());
  if (r < 1 || r > p) {
    throw SizeError("basis size r=" + std::to_string(r) + " outside [1, " + std::to_string(p) + "]");
  }
  return pod_from_svd(thin_svd(shifted), Vector::Zero(shifted.rows()), RefMode::time_mean, r);
}

PodBasis pod(const CenteredData& centered, Index r) {
  PodBasis b = pod(centered.shifted, r);
  b.s_ref = centered.s_ref;
  b.ref_mode = centered.ref_mode;
  return b;
}

Index choose_dimension(const Vector& singular_values, double kappa) {
  if (!(kappa > 0.0 && kappa <= 1.0)) throw ConfigError("kappa must lie in (0, 1]");
  const double total = singular_values.squaredNorm();
  if (total == 0.0) throw ValidationError("cannot choose a dimension for all-zero data");
  const double tol = 1e-12 * singular_values.size();
  if (kappa == 1.0) {
    // Full energy: the numerical rank.
    const double floor = singular_values[0] * 1e-12;
    Index rank = 0;
    while (rank < singular_values.size() && singular_values[rank] > floor) ++rank;
    return rank;
  }
  double acc = 0.0;
  for (Index i = 0; i < singular_values.size(); ++i) {
    acc += singular_values[i] * singular_values[i];
    if (acc / total >= kappa - tol) return i + 1;
  }
  return singular_values.size();
}

Vector encode(const PodBasis& pod, const Vector& s) {
  if (s.size() != pod.n()) {
    throw SizeError("encode: state has length " + std::to_string(s.size()) + ", expected " +
                    std::to_string(pod.n()));
  }
  return pod.V.transpose() * (s - pod.s_ref);
}

Matrix encode(const PodBasis& pod, const Matrix& S) {
  if (S.rows() != pod.n()) {
    throw SizeError("encode: states have " + std::to_string(S.rows()) + " rows, expected " +
                    std::to_string(pod.n()));
  }
  return pod.V.transpose() * (S.colwise() - pod.s_ref);
}

Vector quad_features(const Vector& shat, const QuadFeatureMap& fmap) {
  if (shat.size() != fmap.r) throw SizeError("quad_features: state length does not match r");
  Vector w(fmap.q());
  for (Index m = 0; m < fmap.q(); ++m) {
    auto [i, j] = fmap.pairs[static_cast<std::size_t>(m)];
    w[m] = shat[i] * shat[j];
  }
  return w;
}

Matrix quad_feature_matrix(const Matrix& shat, const QuadFeatureMap& fmap) {
  if (shat.rows() != fmap.r) throw SizeError("quad_feature_matrix: row count does not match r");
  Matrix W;
  kernels::parallel::quad_feature_matrix(shat, fmap.pairs, W);
  return W;
}

Matrix projection_error(const PodBasis& pod, const Matrix& shifted) {
  if (shifted.rows() != pod.n()) throw SizeError("projection_error: row count mismatch");
  return shifted - pod.V * (pod.V.transpose() * shifted);
}

QuadraticManifold fit_vbar(const PodBasis& pod, const Matrix& shifted,
                           const QuadFeatureMap& fmap, double gamma) {
  if (fmap.r != pod.r()) throw SizeError("fit_vbar: feature map r does not match the basis");
  fmap.validate();
  QuadraticManifold m;
  m.pod = pod;
  m.fmap = fmap;
  m.gamma = gamma;
  if (fmap.q() == 0) {
    m.vbar = Matrix::Zero(pod.n(), 0);
    return m;
  }
  if (shifted.rows() != pod.n()) throw SizeError("fit_vbar: row count mismatch");
  const Matrix shat = pod.V.transpose() * shifted;
  const Matrix E = projection_error(pod, shifted);
  const Matrix W = quad_feature_matrix(shat, fmap);
  m.vbar = solve_ridge_rows(W, E.transpose(), gamma).transpose();
  return m;
}

QuadraticManifold linear_manifold(const PodBasis& pod) {
  QuadraticManifold m;
  m.pod = pod;
  m.fmap = QuadFeatureMap::empty(pod.r());
  m.vbar = Matrix::Zero(pod.n(), 0);
  return m;
}

Vector decode(const QuadraticManifold& m, const Vector& shat) {
  if (shat.size() != m.r()) throw SizeError("decode: reduced state length does not match r");
  Vector out(m.n());
  kernels::decode_into(m.pod.s_ref, m.pod.V, m.vbar, m.fmap.pairs, shat, out);
  return out;
}

Matrix decode(const QuadraticManifold& m, const Matrix& shat) {
  if (shat.rows() != m.r()) throw SizeError("decode: reduced states do not have r rows");
  Matrix out;
  kernels::parallel::decode_columns(m.pod.s_ref, m.pod.V, m.vbar, m.fmap.pairs, shat, out);
  return out;
}

double retained_energy_linear(const PodBasis& pod, Index r_eval) {
  if (r_eval < 0 || r_eval > pod.singular_values.size()) {
    throw SizeError("retained_energy_linear: r out of range");
  }
  const double total = pod.singular_values.squaredNorm();
  if (total == 0.0) return 1.0;
  return pod.singular_values.head(r_eval).squaredNorm() / total;
}

double retained_energy_quadratic(const QuadraticManifold& m, const Matrix& S) {
  const Matrix Sc = S.colwise() - m.pod.s_ref;
  const double total = Sc.squaredNorm();
  if (total == 0.0) return 1.0;
  const Matrix shat = m.pod.V.transpose() * Sc;
  Matrix approx = m.pod.V * shat;
  if (m.q() > 0) approx += m.vbar * quad_feature_matrix(shat, m.fmap);
  return approx.squaredNorm() / total;
}

double relative_error(const Matrix& truth, const Matrix& approx) {
  if (truth.rows() != approx.rows() || truth.cols() != approx.cols()) {
    throw SizeError("relative_error: shape mismatch");
  }
  const double denom = truth.norm();
  if (denom == 0.0) throw ValidationError("relative_error: reference has zero norm");
  return (truth - approx).norm() / denom;
}

double reconstruction_error(const QuadraticManifold& m, const Matrix& S) {
  return relative_error(S, decode(m, encode(m.pod, S)));
}

}  // namespace qmrom
