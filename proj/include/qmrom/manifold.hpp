#pragma once

#include <optional>
#include <vector>

#include "qmrom/numerics.hpp"
#include "qmrom/types.hpp"

namespace qmrom {

struct SnapshotSet {
  Matrix states;               // n x k, one state per column
  Vector times;                // k
  std::vector<double> params;  // empty, or one label per column
  std::optional<Matrix> derivatives;
  int derivative_order = 0;    // 1 or 2 when derivatives are present

  Index n() const { return states.rows(); }
  Index k() const { return states.cols(); }
  void validate() const;
  // Half-open column ranges of consecutive columns sharing a label.
  std::vector<std::pair<Index, Index>> segments() const;
};

// Quadratic feature selection. Pairs are 0-based internally and printed
// 1-based. The full map lists (0,0),(0,1),...,(0,r-1),(1,1),...,(r-1,r-1).
struct QuadFeatureMap {
  Index r = 0;
  std::vector<IndexPair> pairs;

  static QuadFeatureMap full(Index r);
  static QuadFeatureMap empty(Index r);
  static QuadFeatureMap from_pairs(Index r, std::vector<IndexPair> pairs);
  // Keep the pairs at the given positions of this map.
  QuadFeatureMap subset(const std::vector<Index>& positions) const;

  Index q() const { return static_cast<Index>(pairs.size()); }
  void validate() const;
  bool operator==(const QuadFeatureMap&) const = default;
};

inline Index full_feature_count(Index r) { return r * (r + 1) / 2; }

struct CenteredData {
  Vector s_ref;
  Matrix shifted;
  RefMode ref_mode = RefMode::time_mean;
};

struct PodBasis {
  Matrix V;                // n x r
  Vector singular_values;  // min(n, k)
  Vector s_ref;            // n
  RefMode ref_mode = RefMode::time_mean;

  Index n() const { return V.rows(); }
  Index r() const { return V.cols(); }
  void validate() const;
};

struct QuadraticManifold {
  PodBasis pod;
  Matrix vbar;  // n x q
  QuadFeatureMap fmap;
  double gamma = 0.0;

  Index n() const { return pod.n(); }
  Index r() const { return pod.r(); }
  Index q() const { return fmap.q(); }
  void validate() const;
};

CenteredData center(const Matrix& S, RefMode mode);

PodBasis pod(const Matrix& shifted, Index r);
PodBasis pod(const CenteredData& centered, Index r);
// Truncate a precomputed decomposition of the shifted data.
PodBasis pod_from_svd(const SvdResult& svd, const Vector& s_ref, RefMode mode,
                      Index r);

// Smallest r whose relative cumulative energy reaches kappa.
Index choose_dimension(const Vector& singular_values, double kappa);

Vector encode(const PodBasis& pod, const Vector& s);
Matrix encode(const PodBasis& pod, const Matrix& S);

Vector quad_features(const Vector& shat, const QuadFeatureMap& fmap);
Matrix quad_feature_matrix(const Matrix& shat, const QuadFeatureMap& fmap);

// (I - V V^T) shifted, applied without forming the complement basis.
Matrix projection_error(const PodBasis& pod, const Matrix& shifted);

QuadraticManifold fit_vbar(const PodBasis& pod, const Matrix& shifted,
                           const QuadFeatureMap& fmap, double gamma);
QuadraticManifold linear_manifold(const PodBasis& pod);

Vector decode(const QuadraticManifold& m, const Vector& shat);
Matrix decode(const QuadraticManifold& m, const Matrix& shat);

double retained_energy_linear(const PodBasis& pod, Index r_eval);
// Uses the manifold's own r; refit for another r.
double retained_energy_quadratic(const QuadraticManifold& m, const Matrix& S);

// |A - B|_F / |A|_F.
double relative_error(const Matrix& truth, const Matrix& approx);
// Relative error of decode(encode(S)) against S.
double reconstruction_error(const QuadraticManifold& m, const Matrix& S);

}  // namespace qmrom
