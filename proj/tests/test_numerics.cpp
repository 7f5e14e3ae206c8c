#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "qmrom/errors.hpp"
#include "qmrom/numerics.hpp"

using namespace qmrom;

TEST(ThinSvd, IdentityHasUnitSingularValues) {
  auto s = thin_svd(Matrix::Identity(3, 3));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(s.singular_values[i], 1.0, 1e-14);
}

TEST(ThinSvd, ColumnOfOnes) {
  auto s = thin_svd(Matrix::Ones(3, 1));
  ASSERT_EQ(s.singular_values.size(), 1);
  EXPECT_NEAR(s.singular_values[0], std::sqrt(3.0), 1e-14);
}

TEST(ThinSvd, SquaredSingularValuesMatchJacobiEigenvalues) {
  oracle::Gen gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix a = gen.matrix(6, 4);
    auto s = thin_svd(a);
    auto ev = oracle::jacobi_eigenvalues(a.transpose() * a);
    for (Index i = 0; i < 4; ++i) {
      const double sig2 = s.singular_values[i] * s.singular_values[i];
      EXPECT_NEAR(sig2, ev[static_cast<std::size_t>(i)], 1e-9 * ev[0]);
    }
  }
}

TEST(ThinSvd, ReconstructionAndOrthonormalityProperty) {
  oracle::Gen gen(13);
  for (int trial = 0; trial < 1000; ++trial) {
    // Mostly small shapes with an occasional large one keeps the suite quick.
    const bool big = trial % 100 == 0;
    const Index n = big ? gen.integer(100, 200) : gen.integer(1, 30);
    const Index k = big ? gen.integer(50, 100) : gen.integer(1, 30);
    Matrix a = gen.matrix(n, k) * gen.uniform(0.1, 10.0);
    auto s = thin_svd(a);
    const Index p = std::min(n, k);
    ASSERT_EQ(s.U.cols(), p);
    ASSERT_EQ(s.Vt.rows(), p);
    Matrix recon = s.U * s.singular_values.asDiagonal() * s.Vt;
    ASSERT_LE((a - recon).norm(), 1e-10 * a.norm()) << n << "x" << k;
    ASSERT_LE(oracle::max_abs(s.U.transpose() * s.U - Matrix::Identity(p, p)), 1e-10);
    ASSERT_LE(oracle::max_abs(s.Vt * s.Vt.transpose() - Matrix::Identity(p, p)), 1e-10);
    for (Index i = 0; i < p; ++i) {
      ASSERT_GE(s.singular_values[i], 0.0);
      if (i) ASSERT_LE(s.singular_values[i], s.singular_values[i - 1]);
    }
  }
}

TEST(ThinSvd, SignConventionLargestEntryPositive) {
  oracle::Gen gen(17);
  auto s = thin_svd(gen.matrix(8, 5));
  for (Index j = 0; j < s.U.cols(); ++j) {
    Index imax = 0;
    s.U.col(j).cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(s.U(imax, j), 0.0);
  }
}

TEST(ThinSvd, NonFiniteInputRejected) {
  Matrix a = Matrix::Ones(3, 3);
  a(1, 1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(thin_svd(a), ValidationError);
}

TEST(SolveRidgeRows, ZeroTargetsGiveZero) {
  oracle::Gen gen(1);
  Matrix w = gen.matrix(3, 10);
  for (double g : {0.0, 0.1, 10.0}) {
    EXPECT_EQ(solve_ridge_rows(w, Matrix::Zero(10, 4), g).norm(), 0.0);
  }
}

TEST(SolveRidgeRows, IdentityDesignReturnsTargets) {
  oracle::Gen gen(2);
  Matrix t = gen.matrix(5, 3);
  EXPECT_LE(oracle::max_abs(solve_ridge_rows(Matrix::Identity(5, 5), t, 0.0) - t), 1e-14);
}

TEST(SolveRidgeRows, MatchesGaussianEliminationInverse) {
  oracle::Gen gen(3);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix w = gen.matrix(4, 20);
    Matrix t = gen.matrix(20, 3);
    Matrix reg = w * w.transpose();
    reg.diagonal().array() += 0.5;
    Matrix expected = oracle::gauss_inverse(reg) * (w * t);
    EXPECT_LE(oracle::rel_diff(expected, solve_ridge_rows(w, t, 0.5)), 1e-10);
  }
}

TEST(SolveRidgeRows, SingularGramWithoutRegularizationIsIllConditioned) {
  Matrix w(2, 5);
  w.row(0) << 1, 2, 3, 4, 5;
  w.row(1) = 2.0 * w.row(0);
  try {
    solve_ridge_rows(w, Matrix::Ones(5, 1), 0.0);
    FAIL();
  } catch (const IllConditionedError& e) {
    EXPECT_NE(std::string(e.what()).find("regularization"), std::string::npos);
  }
  EXPECT_NO_THROW(solve_ridge_rows(w, Matrix::Ones(5, 1), 1e-3));
}

TEST(SolveRidgeRows, NegativeGammaRejected) {
  EXPECT_THROW(solve_ridge_rows(Matrix::Identity(2, 2), Matrix::Ones(2, 1), -1.0),
               ValidationError);
}

TEST(SolveRidgeRows, ShrinkageIsMonotoneInGamma) {
  oracle::Gen gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Index q = gen.integer(1, 6);
    Matrix w = gen.matrix(q, gen.integer(q, 30));
    Matrix t = gen.matrix(w.cols(), gen.integer(1, 4));
    double g1 = gen.uniform(1e-6, 1.0);
    double g2 = g1 * gen.uniform(1.0, 100.0);
    EXPECT_GE(solve_ridge_rows(w, t, g1).norm(), solve_ridge_rows(w, t, g2).norm() * (1 - 1e-12));
  }
}

TEST(SolveRidgeRows, ColumnsSolvedIndependently) {
  oracle::Gen gen(5);
  Matrix w = gen.matrix(4, 15);
  Matrix t = gen.matrix(15, 6);
  Matrix all = solve_ridge_rows(w, t, 0.3);
  for (Index j = 0; j < 6; ++j) {
    Matrix one = solve_ridge_rows(w, t.col(j), 0.3);
    EXPECT_LE((all.col(j) - one).cwiseAbs().maxCoeff(), 1e-13 * std::max(1.0, one.norm()));
  }
}

TEST(Stencil, FrozenCoefficientsMatchVandermondeConstruction) {
  const std::vector<double> six = {0, 1, 2, 3, 4, 5};
  const std::vector<double> five = {-2, -1, 0, 1, 2};
  for (int d : {1, 2}) {
    auto spec = d == 1 ? StencilSpec::first_derivative() : StencilSpec::second_derivative();
    auto interior = oracle::stencil_weights(five, 0.0, d);
    for (int m = 0; m < 5; ++m) EXPECT_NEAR(spec.interior[m], interior[m], 1e-12);
    for (int b = 0; b < 2; ++b) {
      auto w = oracle::stencil_weights(six, static_cast<double>(b), d);
      for (int m = 0; m < 6; ++m) {
        EXPECT_NEAR(spec.boundary[b][m], w[m], 1e-11) << "d=" << d << " b=" << b << " m=" << m;
      }
    }
  }
}

TEST(Stencil, WeightsAnnihilateLowDegreeMonomials) {
  for (int d : {1, 2}) {
    auto spec = d == 1 ? StencilSpec::first_derivative() : StencilSpec::second_derivative();
    for (int p = 0; p <= 4; ++p) {
      auto mono = [&](double x) { return std::pow(x, p); };
      auto deriv = [&](double x) {
        if (p < d) return 0.0;
        return d == 1 ? p * std::pow(x, p - 1) : p * (p - 1) * std::pow(x, p - 2);
      };
      double interior = 0.0;
      for (int m = 0; m < 5; ++m) interior += spec.interior[m] * mono(m - 2.0);
      EXPECT_NEAR(interior, deriv(0.0), 1e-12) << "d=" << d << " p=" << p;
      for (int b = 0; b < 2; ++b) {
        double one_sided = 0.0;
        for (int m = 0; m < 6; ++m) one_sided += spec.boundary[b][m] * mono(m);
        EXPECT_NEAR(one_sided, deriv(b), 1e-11) << "d=" << d << " b=" << b << " p=" << p;
      }
    }
  }
}

TEST(FdDerivative, QuarticIsDifferentiatedExactly) {
  for (double dt : {0.1, 0.37, 1.0}) {
    const Index k = 20;
    Matrix s(1, k), d2(1, k), d1(1, k);
    for (Index j = 0; j < k; ++j) {
      const double t = 0.3 + dt * static_cast<double>(j);
      s(0, j) = std::pow(t, 4);
      d1(0, j) = 4 * std::pow(t, 3);
      d2(0, j) = 12 * t * t;
    }
    Matrix got2 = fd_derivative(s, dt, StencilSpec::second_derivative());
    Matrix got1 = fd_derivative(s, dt, StencilSpec::first_derivative());
    for (Index j = 0; j < k; ++j) {
      EXPECT_NEAR(got2(0, j), d2(0, j), 1e-8 * std::max(1.0, std::abs(d2(0, j)))) << j;
      EXPECT_NEAR(got1(0, j), d1(0, j), 1e-8 * std::max(1.0, std::abs(d1(0, j)))) << j;
    }
  }
}

TEST(FdDerivative, ConstantSeriesGivesZero) {
  Matrix s = Matrix::Constant(3, 12, 4.2);
  EXPECT_LE(oracle::max_abs(fd_derivative(s, 0.1, StencilSpec::first_derivative())), 1e-11);
  EXPECT_LE(oracle::max_abs(fd_derivative(s, 0.1, StencilSpec::second_derivative())), 1e-9);
}

TEST(FdDerivative, SineConvergesAtFourthOrder) {
  auto interior_error = [](double dt) {
    const Index k = static_cast<Index>(std::round(2.0 / dt)) + 1;
    Matrix s(1, k);
    for (Index j = 0; j < k; ++j) s(0, j) = std::sin(dt * static_cast<double>(j));
    Matrix d = fd_derivative(s, dt, StencilSpec::second_derivative());
    double err = 0.0;
    for (Index j = 2; j + 2 < k; ++j) {
      err = std::max(err, std::abs(d(0, j) + std::sin(dt * static_cast<double>(j))));
    }
    return err;
  };
  const double ratio = interior_error(0.1) / interior_error(0.05);
  EXPECT_NEAR(ratio, 16.0, 16.0 * 0.2);
}

TEST(FdDerivative, TooFewSamplesIsSizeError) {
  EXPECT_THROW(fd_derivative(Matrix::Ones(2, 5), 0.1, StencilSpec::first_derivative()), SizeError);
  EXPECT_THROW(fd_derivative(Matrix::Ones(2, 6), 0.0, StencilSpec::first_derivative()),
               ValidationError);
}

TEST(SpdCondition, DiagonalMatrix) {
  Matrix g = Vector{{4.0, 2.0, 0.5}}.asDiagonal();
  EXPECT_NEAR(spd_condition(g), 8.0, 1e-12);
  EXPECT_TRUE(std::isinf(spd_condition(Matrix::Zero(2, 2))));
}
