#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qmrom/errors.hpp"
#include "qmrom/manifold.hpp"
#include "qmrom/problems.hpp"

using namespace qmrom;

namespace {

struct Helix {
  SnapshotSet set = helix_snapshots(100);
  CenteredData c = center(set.states, RefMode::initial);
};

// Columns compared up to a common sign.
void expect_col_near(const Vector& got, const Vector& want, double tol) {
  const double sign = got.dot(want) < 0.0 ? -1.0 : 1.0;
  for (Index i = 0; i < want.size(); ++i) EXPECT_NEAR(sign * got[i], want[i], tol) << "entry " << i;
}

double error_with_pairs(const Helix& h, std::vector<IndexPair> pairs) {
  auto m = fit_vbar(pod(h.c, 2), h.c.shifted, QuadFeatureMap::from_pairs(2, pairs), 0.0);
  return reconstruction_error(m, h.set.states);
}

}  // namespace

TEST(Center, IdenticalColumnsGiveZeroShift) {
  Matrix S = Vector{{1.0, -2.0, 3.0}}.replicate(1, 5);
  EXPECT_EQ(center(S, RefMode::time_mean).shifted.norm(), 0.0);
}

TEST(Center, HelixInitialReference) {
  Helix h;
  EXPECT_NEAR(h.c.s_ref[0], 1.0, 1e-15);
  EXPECT_NEAR(h.c.s_ref[1], 0.0, 1e-15);
  EXPECT_NEAR(h.c.s_ref[2], 0.5, 1e-15);
  EXPECT_EQ(h.c.shifted.col(0).norm(), 0.0);
}

TEST(Center, TwoColumnMeanIsSymmetric) {
  Matrix S(2, 2);
  S << 1, 5, -2, 4;
  auto c = center(S, RefMode::time_mean);
  EXPECT_NEAR(c.shifted(0, 0), -2.0, 1e-15);
  EXPECT_NEAR(c.shifted(0, 1), 2.0, 1e-15);
  EXPECT_NEAR(c.shifted(1, 0), -3.0, 1e-15);
}

TEST(Pod, HelixPrintedVectors) {
  Helix h;
  auto b = pod(h.c, 3);
  expect_col_near(b.V.col(0), Vector{{-0.9347, 0.0, -0.3554}}, 1e-3);
  expect_col_near(b.V.col(1), Vector{{0.0, 1.0, 0.0}}, 1e-3);
  expect_col_near(b.V.col(2), Vector{{0.3554, 0.0, -0.9347}}, 1e-3);
}

TEST(Pod, RankOneDataHasVanishingTail) {
  oracle::Gen gen(1);
  Matrix S = gen.vector(7) * gen.vector(9).transpose();
  auto b = pod(S, 1);
  for (Index i = 1; i < b.singular_values.size(); ++i) {
    EXPECT_LE(b.singular_values[i], 1e-12 * b.singular_values[0]);
  }
}

TEST(Pod, FullBasisReconstructsRandomData) {
  oracle::Gen gen(2);
  Matrix S = gen.matrix(8, 5);
  auto b = pod(S, 5);
  EXPECT_LE(oracle::rel_diff(S, b.V * (b.V.transpose() * S)), 1e-10);
  EXPECT_LE(oracle::max_abs(b.V.transpose() * b.V - Matrix::Identity(5, 5)), 1e-10);
}

TEST(Pod, OutOfRangeDimensionIsSizeError) {
  Matrix S = Matrix::Ones(4, 3);
  EXPECT_THROW(pod(S, 0), SizeError);
  EXPECT_THROW(pod(S, 4), SizeError);
}

TEST(ChooseDimension, FullEnergyGivesNumericalRank) {
  oracle::Gen gen(3);
  Matrix S = gen.matrix(10, 3) * gen.matrix(3, 12);
  auto c = center(S, RefMode::time_mean);
  auto sv = thin_svd(c.shifted).singular_values;
  EXPECT_EQ(choose_dimension(sv, 1.0), 3);
  Vector sv2{{3.0, 4.0}};
  EXPECT_EQ(choose_dimension(sv2, 0.36), 1);
  EXPECT_EQ(choose_dimension(sv2, 0.37), 2);
  EXPECT_THROW(choose_dimension(sv2, 0.0), ConfigError);
}

TEST(Encode, ReferenceAndBasisVectors) {
  oracle::Gen gen(4);
  auto b = pod(center(gen.matrix(6, 10), RefMode::time_mean), 3);
  EXPECT_LE(encode(b, b.s_ref).norm(), 1e-15);
  Vector e = encode(b, Vector(b.s_ref + b.V.col(0)));
  EXPECT_NEAR(e[0], 1.0, 1e-12);
  EXPECT_NEAR(e[1], 0.0, 1e-12);
  EXPECT_THROW(encode(b, Vector(Vector::Zero(5))), SizeError);
}

TEST(Encode, HelixQuarterTurnMatchesDotProducts) {
  Helix h;
  auto b = pod(h.c, 2);
  Vector s = helix_state(std::numbers::pi / 2);
  Vector d = s - h.c.s_ref;
  Vector got = encode(b, s);
  for (Index i = 0; i < 2; ++i) {
    double dot = 0.0;
    for (Index j = 0; j < 3; ++j) dot += b.V(j, i) * d[j];
    EXPECT_NEAR(got[i], dot, 1e-14);
  }
}

TEST(QuadFeatures, ArithmeticAndOrdering) {
  EXPECT_EQ(quad_features(Vector::Zero(2), QuadFeatureMap::full(2)).norm(), 0.0);
  Vector w = quad_features(Vector{{2.0, 3.0}}, QuadFeatureMap::full(2));
  ASSERT_EQ(w.size(), 3);
  EXPECT_EQ(w[0], 4.0);
  EXPECT_EQ(w[1], 6.0);
  EXPECT_EQ(w[2], 9.0);
  Vector w2 = quad_features(Vector{{5.0, 3.0}}, QuadFeatureMap::from_pairs(2, {{1, 1}}));
  ASSERT_EQ(w2.size(), 1);
  EXPECT_EQ(w2[0], 9.0);
}

TEST(QuadFeatureMap, FullMapIsLexicographicUpperTriangle) {
  for (Index r = 1; r <= 6; ++r) {
    auto f = QuadFeatureMap::full(r);
    ASSERT_EQ(f.q(), r * (r + 1) / 2);
    std::size_t m = 0;
    for (int i = 0; i < r; ++i) {
      for (int j = i; j < r; ++j) EXPECT_EQ(f.pairs[m++], IndexPair(i, j));
    }
  }
}

TEST(QuadFeatureMap, RejectsUnsortedDuplicateOrOutOfRange) {
  EXPECT_THROW(QuadFeatureMap::from_pairs(2, {{1, 1}, {0, 0}}), ValidationError);
  EXPECT_THROW(QuadFeatureMap::from_pairs(2, {{0, 0}, {0, 0}}), ValidationError);
  EXPECT_THROW(QuadFeatureMap::from_pairs(2, {{1, 0}}), ValidationError);
  EXPECT_THROW(QuadFeatureMap::from_pairs(2, {{0, 2}}), ValidationError);
}

TEST(ProjectionError, VanishesInSpanAndMatchesTailEnergy) {
  oracle::Gen gen(5);
  Matrix basis = oracle::gram_schmidt(gen.matrix(9, 3));
  Matrix inspan = basis * gen.matrix(3, 7);
  auto b = pod(inspan, 3);
  EXPECT_LE(projection_error(b, inspan).norm(), 1e-12 * inspan.norm());

  for (int trial = 0; trial < 20; ++trial) {
    Matrix S = gen.matrix(12, 8);
    const Index r = gen.integer(1, 7);
    auto p = pod(S, r);
    const double tail = p.singular_values.tail(p.singular_values.size() - r).squaredNorm();
    EXPECT_NEAR(projection_error(p, S).squaredNorm(), tail, 1e-8 * tail);
  }
  Matrix S = gen.matrix(6, 4);
  EXPECT_LE(projection_error(pod(S, 4), S).norm(), 1e-10 * S.norm());
}

TEST(FitVbar, HelixPrintedColumns) {
  Helix h;
  auto m = fit_vbar(pod(h.c, 2), h.c.shifted, QuadFeatureMap::full(2), 0.0);
  ASSERT_EQ(m.vbar.cols(), 3);
  expect_col_near(m.vbar.col(0), Vector{{-0.0681, 0.0, 0.1792}}, 1e-3);
  EXPECT_LE(m.vbar.col(1).norm(), 1e-6);
  expect_col_near(m.vbar.col(2), Vector{{0.3154, 0.0, -0.8296}}, 1e-3);
}

TEST(FitVbar, ZeroErrorGivesZeroVbar) {
  oracle::Gen gen(6);
  Matrix basis = oracle::gram_schmidt(gen.matrix(8, 2));
  Matrix S = basis * gen.matrix(2, 20);
  auto c = center(S, RefMode::time_mean);
  for (double g : {0.1, 1.0}) {
    auto m = fit_vbar(pod(c, 2), c.shifted, QuadFeatureMap::full(2), g);
    EXPECT_LE(m.vbar.norm(), 1e-12);
  }
}

TEST(FitVbar, MatchesDenseNormalEquationOracle) {
  oracle::Gen gen(7);
  Matrix S = gen.matrix(6, 30);
  auto c = center(S, RefMode::time_mean);
  auto b = pod(c, 2);
  auto m = fit_vbar(b, c.shifted, QuadFeatureMap::full(2), 0.1);

  Matrix shat = b.V.transpose() * c.shifted;
  Matrix W(3, 30);
  for (Index j = 0; j < 30; ++j) {
    W(0, j) = shat(0, j) * shat(0, j);
    W(1, j) = shat(0, j) * shat(1, j);
    W(2, j) = shat(1, j) * shat(1, j);
  }
  Matrix E = c.shifted - b.V * shat;
  Matrix reg = W * W.transpose() + 0.1 * Matrix::Identity(3, 3);
  Matrix expected = E * W.transpose() * oracle::gauss_inverse(reg);
  EXPECT_LE(oracle::rel_diff(expected, m.vbar), 1e-10);
}

TEST(FitVbar, OrthogonalToBasisProperty) {
  oracle::Gen gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = gen.integer(4, 30), k = gen.integer(10, 60);
    const Index r = gen.integer(1, std::min<Index>(4, std::min(n, k) - 1));
    Matrix S = gen.matrix(n, k);
    auto c = center(S, gen.coin() ? RefMode::initial : RefMode::time_mean);
    auto full = QuadFeatureMap::full(r);
    auto fmap = full.subset(gen.subset(full.q(), gen.integer(1, full.q())));
    const double gamma = std::vector<double>{1e-6, 1.0, 1e6}[gen.integer(0, 2)];
    auto m = fit_vbar(pod(c, r), c.shifted, fmap, gamma);
    const double tol = 1e-8 * std::max(1.0, m.vbar.norm());
    EXPECT_LE(oracle::max_abs(m.pod.V.transpose() * m.vbar), tol);
  }
}

TEST(FitVbar, FitErrorNonDecreasingInGamma) {
  oracle::Gen gen(9);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix S = gen.matrix(10, 40);
    auto c = center(S, RefMode::time_mean);
    auto b = pod(c, 3);
    Matrix E = projection_error(b, c.shifted);
    auto fmap = QuadFeatureMap::full(3);
    Matrix W = quad_feature_matrix(b.V.transpose() * c.shifted, fmap);
    double prev = -1.0;
    for (double g : {0.0, 1e-4, 1e-2, 1.0, 1e2, 1e4}) {
      auto m = fit_vbar(b, c.shifted, fmap, g);
      const double err = (W.transpose() * m.vbar.transpose() - E.transpose()).norm();
      EXPECT_GE(err, prev - 1e-10 * std::max(1.0, err));
      prev = err;
    }
  }
}

TEST(Decode, ZeroAndLinearCases) {
  oracle::Gen gen(10);
  Matrix S = gen.matrix(7, 20);
  auto c = center(S, RefMode::time_mean);
  auto b = pod(c, 3);
  auto m = fit_vbar(b, c.shifted, QuadFeatureMap::full(3), 0.01);
  EXPECT_EQ((decode(m, Vector(Vector::Zero(3))) - b.s_ref).norm(), 0.0);
  auto lin = linear_manifold(b);
  Vector shat = gen.vector(3);
  EXPECT_LE((decode(lin, shat) - (b.s_ref + b.V * shat)).norm(), 1e-14);
}

TEST(Decode, MatrixAndVectorPathsAgree) {
  oracle::Gen gen(11);
  Matrix S = gen.matrix(9, 25);
  auto c = center(S, RefMode::time_mean);
  auto m = fit_vbar(pod(c, 3), c.shifted, QuadFeatureMap::full(3), 0.1);
  Matrix shat = gen.matrix(3, 6);
  Matrix all = decode(m, shat);
  for (Index j = 0; j < 6; ++j) {
    EXPECT_EQ((all.col(j) - decode(m, Vector(shat.col(j)))).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Decode, EncodeDecodeConsistencyOnManifold) {
  oracle::Gen gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix S = gen.matrix(8, 30);
    auto c = center(S, RefMode::time_mean);
    auto m = fit_vbar(pod(c, 3), c.shifted, QuadFeatureMap::full(3), gen.uniform(0.0, 1.0));
    Vector shat = gen.vector(3);
    Vector s = decode(m, shat);
    Vector again = decode(m, encode(m.pod, s));
    EXPECT_LE((again - s).norm(), 1e-10 * s.norm());
  }
}

TEST(Helix, TableOneErrors) {
  Helix h;
  EXPECT_NEAR(error_with_pairs(h, {{0, 0}}), 0.3971, 5e-3);
  EXPECT_NEAR(error_with_pairs(h, {{0, 1}}), 0.4032, 5e-3);
  EXPECT_NEAR(error_with_pairs(h, {{1, 1}}), 0.3042, 5e-3);
  EXPECT_NEAR(error_with_pairs(h, {{0, 0}, {0, 1}}), 0.3971, 5e-3);
  EXPECT_NEAR(error_with_pairs(h, {{0, 1}, {1, 1}}), 0.3042, 5e-3);
  EXPECT_NEAR(error_with_pairs(h, {{0, 0}, {1, 1}}), 0.0258, 5e-3);
  EXPECT_NEAR(error_with_pairs(h, {{0, 0}, {0, 1}, {1, 1}}), 0.0258, 5e-3);
  EXPECT_NEAR(reconstruction_error(linear_manifold(pod(h.c, 2)), h.set.states), 0.4032, 5e-3);
}

TEST(Energy, LinearIsOneAtFullRankAndQuadraticEqualsLinearWithoutVbar) {
  oracle::Gen gen(13);
  Matrix S = gen.matrix(10, 6);
  auto c = center(S, RefMode::time_mean);
  auto b = pod(c, 3);
  EXPECT_NEAR(retained_energy_linear(b, b.singular_values.size()), 1.0, 1e-15);
  EXPECT_NEAR(retained_energy_quadratic(linear_manifold(b), S), retained_energy_linear(b, 3),
              1e-12);
}

TEST(Energy, QuadraticDominatesLinearProperty) {
  oracle::Gen gen(14);
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = gen.integer(5, 20), k = gen.integer(8, 40);
    Matrix S = gen.matrix(n, k);
    auto c = center(S, RefMode::time_mean);
    const Index r = gen.integer(1, std::min<Index>(4, std::min(n, k) - 1));
    auto b = pod(c, r);
    const double gamma = gen.coin() ? 0.0 : gen.uniform(0.0, 10.0);
    QuadraticManifold m;
    try {
      m = fit_vbar(b, c.shifted, QuadFeatureMap::full(r), gamma);
    } catch (const IllConditionedError&) {
      m = fit_vbar(b, c.shifted, QuadFeatureMap::full(r), 1e-8);
    }
    EXPECT_GE(retained_energy_quadratic(m, S), retained_energy_linear(b, r) - 1e-12);
  }
}

TEST(RelativeError, Limits) {
  oracle::Gen gen(15);
  Matrix S = gen.matrix(4, 5);
  EXPECT_EQ(relative_error(S, S), 0.0);
  EXPECT_NEAR(relative_error(S, Matrix::Zero(4, 5)), 1.0, 1e-15);
}

TEST(SnapshotSet, ValidationAndSegments) {
  SnapshotSet s;
  s.states = Matrix::Ones(2, 4);
  s.times = Vector{{0.0, 1.0, 0.0, 1.0}};
  s.params = {1, 1, 2, 2};
  EXPECT_NO_THROW(s.validate());
  auto seg = s.segments();
  ASSERT_EQ(seg.size(), 2u);
  EXPECT_EQ(seg[1], std::make_pair(Index{2}, Index{4}));
  s.params.clear();
  EXPECT_THROW(s.validate(), ValidationError);
}
