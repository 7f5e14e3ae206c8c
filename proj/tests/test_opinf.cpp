#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "qmrom/errors.hpp"
#include "qmrom/opinf.hpp"
#include "qmrom/problems.hpp"
#include "qmrom/rom.hpp"

using namespace qmrom;

namespace {

double ops_rel_diff(const RomOperators& want, const RomOperators& got) {
  const double num = (want.c_hat - got.c_hat).squaredNorm() +
                     (want.A_hat - got.A_hat).squaredNorm() +
                     (want.H_hat - got.H_hat).squaredNorm();
  const double den =
      want.c_hat.squaredNorm() + want.A_hat.squaredNorm() + want.H_hat.squaredNorm();
  return std::sqrt(num / den);
}

// Samples from several short RK4 trajectories of a stable quadratic system.
OpinfProblem sampled_problem(const RomOperators& truth, oracle::Gen& gen, Index trajectories,
                             Index per_traj) {
  const Index r = truth.r();
  OpinfProblem p;
  p.fmap = truth.fmap;
  p.shat.resize(r, trajectories * per_traj);
  p.dhat.resize(r, trajectories * per_traj);
  auto f = [&](const Vector& x) { return rhs(truth, x); };
  Index col = 0;
  for (Index t = 0; t < trajectories; ++t) {
    Vector x = gen.vector(r);
    for (Index j = 0; j < per_traj; ++j) {
      p.shat.col(col) = x;
      p.dhat.col(col) = rhs(truth, x);
      ++col;
      x = oracle::rk4(f, x, 1e-3, 20);
    }
  }
  return p;
}

RomOperators random_quadratic(oracle::Gen& gen, Index r, bool quadratic = true) {
  RomOperators ops;
  ops.fmap = quadratic ? QuadFeatureMap::full(r) : QuadFeatureMap::empty(r);
  ops.c_hat = gen.vector(r) * 0.5;
  ops.A_hat = gen.matrix(r, r) * 0.3 - 2.0 * Matrix::Identity(r, r);
  ops.H_hat = gen.matrix(r, ops.fmap.q()) * 0.2;
  return ops;
}

}  // namespace

TEST(OpinfDataMatrix, LayoutIsOnesStatesFeatures) {
  Matrix shat(2, 3);
  shat << 1, 2, 3, 4, 5, 6;
  Matrix D = opinf_data_matrix(shat, QuadFeatureMap::full(2));
  ASSERT_EQ(D.rows(), 6);
  EXPECT_EQ(D(0, 2), 1.0);
  EXPECT_EQ(D(2, 1), 5.0);
  EXPECT_EQ(D(3, 1), 4.0);
  EXPECT_EQ(D(4, 1), 10.0);
  EXPECT_EQ(D(5, 1), 25.0);
}

TEST(InferLinear, ConstantFieldRecovered) {
  oracle::Gen gen(1);
  OpinfProblem p;
  p.fmap = QuadFeatureMap::empty(3);
  p.shat = gen.matrix(3, 40);
  Vector c{{1.0, -2.0, 0.5}};
  p.dhat = c.replicate(1, 40);
  auto ops = infer_linear(p);
  EXPECT_LE((ops.c_hat - c).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(ops.A_hat.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(InferLinear, SelfConsistentRecovery) {
  oracle::Gen gen(2);
  auto truth = random_quadratic(gen, 3, false);
  auto p = sampled_problem(truth, gen, 5, 20);
  EXPECT_LE(ops_rel_diff(truth, infer_linear(p)), 1e-8);
}

TEST(InferLinear, LargeRegularizationShrinksToZero) {
  oracle::Gen gen(3);
  auto truth = random_quadratic(gen, 3, false);
  auto p = sampled_problem(truth, gen, 5, 20);
  p.lambda1 = 1e14;
  auto ops = infer_linear(p);
  EXPECT_LE(ops.A_hat.norm() + ops.c_hat.norm(), 1e-8);
}

TEST(InferLinear, RejectsQuadraticMap) {
  OpinfProblem p;
  p.fmap = QuadFeatureMap::full(2);
  p.shat = Matrix::Ones(2, 10);
  p.dhat = Matrix::Ones(2, 10);
  EXPECT_THROW(infer_linear(p), ValidationError);
}

TEST(InferQuadratic, SelfConsistentRecovery) {
  oracle::Gen gen(4);
  for (int trial = 0; trial < 5; ++trial) {
    auto truth = random_quadratic(gen, 3);
    auto p = sampled_problem(truth, gen, 8, 25);
    EXPECT_LE(ops_rel_diff(truth, infer_quadratic(p)), 1e-8);
  }
}

TEST(InferQuadratic, NestedLinearDataGivesNoQuadraticTerm) {
  oracle::Gen gen(5);
  auto lin = random_quadratic(gen, 3, false);
  auto p = sampled_problem(lin, gen, 8, 25);
  p.fmap = QuadFeatureMap::full(3);
  auto ops = infer_quadratic(p);
  EXPECT_LE(ops.H_hat.norm(), 1e-8 * ops.A_hat.norm());
}

TEST(InferQuadratic, JointAndPerRowPathsAgree) {
  oracle::Gen gen(6);
  for (int trial = 0; trial < 20; ++trial) {
    const Index r = gen.integer(1, 4);
    OpinfProblem p;
    p.fmap = QuadFeatureMap::full(r);
    p.shat = gen.matrix(r, 60);
    p.dhat = gen.matrix(r, 60);
    p.lambda1 = gen.uniform(0.0, 1.0);
    p.lambda2 = gen.uniform(1e-3, 1.0);
    auto a = infer_quadratic(p, RowSolve::joint);
    auto b = infer_quadratic(p, RowSolve::per_row);
    const double scale = std::max(1.0, a.A_hat.norm() + a.H_hat.norm() + a.c_hat.norm());
    EXPECT_LE((a.A_hat - b.A_hat).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((a.H_hat - b.H_hat).cwiseAbs().maxCoeff(), 1e-12 * scale);
    EXPECT_LE((a.c_hat - b.c_hat).cwiseAbs().maxCoeff(), 1e-12 * scale);
  }
}

TEST(InferQuadratic, RegularizationMonotone) {
  oracle::Gen gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    OpinfProblem p;
    p.fmap = QuadFeatureMap::full(3);
    p.shat = gen.matrix(3, 50);
    p.dhat = gen.matrix(3, 50);
    double prev = std::numeric_limits<double>::infinity();
    for (double l : {1e-6, 1e-3, 1e-1, 1.0, 10.0, 1e3}) {
      p.lambda1 = p.lambda2 = l;
      auto ops = infer_quadratic(p);
      const double norm = std::sqrt(ops.c_hat.squaredNorm() + ops.A_hat.squaredNorm() +
                                    ops.H_hat.squaredNorm());
      EXPECT_LE(norm, prev * (1 + 1e-12));
      prev = norm;
    }
  }
}

TEST(InferQuadratic, GramPathMatchesDirectSolve) {
  oracle::Gen gen(8);
  OpinfProblem p;
  p.fmap = QuadFeatureMap::full(3);
  p.shat = gen.matrix(3, 50);
  p.dhat = gen.matrix(3, 50);
  p.lambda1 = 0.1;
  p.lambda2 = 0.7;
  auto direct = infer_quadratic(p);
  auto viaGram = solve_opinf_gram(opinf_gram(p), 0.1, 0.7);
  EXPECT_LE(ops_rel_diff(direct, viaGram), 1e-13);
}

TEST(InferQuadratic, WaveHyperparametersAccepted) {
  oracle::Gen gen(9);
  OpinfProblem p;
  p.fmap = QuadFeatureMap::full(3);
  p.shat = gen.matrix(3, 50);
  p.dhat = gen.matrix(3, 50);
  p.lambda1 = 1e-2;
  p.lambda2 = 8.6596e-2;
  p.time_order = 2;
  auto ops = infer_quadratic(p);
  EXPECT_EQ(ops.time_order, 2);
  EXPECT_NO_THROW(ops.validate());
}

TEST(InferQuadratic, SingularDataWithoutRegularizationIsIllConditioned) {
  OpinfProblem p;
  p.fmap = QuadFeatureMap::full(2);
  p.shat = Matrix::Ones(2, 30);
  p.dhat = Matrix::Ones(2, 30);
  EXPECT_THROW(infer_quadratic(p), IllConditionedError);
  p.lambda1 = p.lambda2 = 1e-3;
  EXPECT_NO_THROW(infer_quadratic(p));
}

TEST(Intrusive, ZeroAndIdentityOperators) {
  oracle::Gen gen(10);
  Matrix S = gen.matrix(8, 30);
  auto c = center(S, RefMode::time_mean);
  auto m = fit_vbar(pod(c, 3), c.shifted, QuadFeatureMap::full(3), 0.1);
  auto zero = intrusive_galerkin(Matrix::Zero(8, 8), m);
  EXPECT_EQ(zero.A_hat.norm() + zero.c_hat.norm() + zero.H_hat.norm(), 0.0);
  m.pod.s_ref.setZero();
  auto id = intrusive_galerkin(Matrix::Identity(8, 8), m);
  EXPECT_LE(id.c_hat.norm(), 1e-15);
  EXPECT_LE((id.A_hat - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(id.H_hat.cwiseAbs().maxCoeff(), 1e-8 * std::max(1.0, m.vbar.norm()));
  EXPECT_THROW(intrusive_galerkin(Matrix::Zero(7, 7), m), SizeError);
}

TEST(Intrusive, InferredMatchesGalerkinOnUpwindAdvection) {
  // States lying on the learned manifold make the projected dynamics exact,
  // so regression must land on the Galerkin operators.
  const Index n = 256;
  AdvectionSpec spec;
  spec.n = n;
  spec.k = 200;
  auto train = advection_training_set(spec, {0.05, 0.15, 0.25});
  auto c = center(train.states, RefMode::time_mean);
  const Matrix A = advection_matrix(n, spec.c);
  oracle::Gen gen(11);
  for (Index r = 2; r <= 8; r += 3) {
    for (bool quadratic : {false, true}) {
      auto b = pod(c, r);
      auto m = quadratic ? fit_vbar(b, c.shifted, QuadFeatureMap::full(r), 1e4)
                         : linear_manifold(b);
      // Training coordinates plus noise keep the data matrix well scaled.
      const Matrix coords = b.V.transpose() * c.shifted;
      Matrix shat = coords + 0.1 * coords.cwiseAbs().maxCoeff() * gen.matrix(r, coords.cols());
      Matrix S = decode(m, shat);
      OpinfProblem p;
      p.fmap = m.fmap;
      p.shat = encode(m.pod, S);
      p.dhat = m.pod.V.transpose() * (A * S);
      auto inferred = quadratic ? infer_quadratic(p) : infer_linear(p);
      auto galerkin = intrusive_galerkin(A, m);
      EXPECT_LE(ops_rel_diff(galerkin, inferred), 1e-6) << "r=" << r << " quad=" << quadratic;
    }
  }
}

TEST(Sweep, SingleCandidateReturned) {
  auto res = sweep_hyperparameters({1.0}, {2.0}, {3.0},
                                   [](const Hyperparameters&) { return std::optional(0.5); });
  EXPECT_EQ(res.best.gamma, 1.0);
  EXPECT_EQ(res.best.lambda2, 3.0);
  EXPECT_EQ(res.best_error, 0.5);
}

TEST(Sweep, UnstableCandidatesExcluded) {
  auto res = sweep_hyperparameters({1.0}, {1.0, 2.0, 3.0}, {1.0},
                                   [](const Hyperparameters& hp) -> std::optional<double> {
                                     if (hp.lambda1 == 1.0) return std::nullopt;
                                     if (hp.lambda1 == 2.0) throw IntegrationError("boom");
                                     return 0.9;
                                   });
  EXPECT_EQ(res.best.lambda1, 3.0);
  int unstable = 0;
  for (const auto& e : res.table) unstable += e.stable ? 0 : 1;
  EXPECT_EQ(unstable, 2);
}

TEST(Sweep, TieBreaksTowardLargerRegularization) {
  auto res = sweep_hyperparameters({0.1, 1.0}, {1.0, 5.0}, {2.0, 4.0},
                                   [](const Hyperparameters& hp) {
                                     return std::optional(hp.gamma == 0.1 ? 0.5 : 0.5 + 1e-13);
                                   });
  EXPECT_EQ(res.best.gamma, 1.0);
  EXPECT_EQ(res.best.lambda1, 5.0);
  EXPECT_EQ(res.best.lambda2, 4.0);
}

TEST(Sweep, AllUnstableIsInstabilityError) {
  EXPECT_THROW(sweep_hyperparameters({1.0}, {1.0}, {1.0},
                                     [](const Hyperparameters&) -> std::optional<double> {
                                       return std::nullopt;
                                     }),
               InstabilityError);
  EXPECT_THROW(sweep_hyperparameters({}, {1.0}, {1.0},
                                     [](const Hyperparameters&) { return std::optional(1.0); }),
               ConfigError);
}
