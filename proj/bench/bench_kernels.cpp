// Serial reference vs OpenMP kernels on problem-sized inputs.
// Run with --benchmark_filter=<kernel> to compare one pair.

#include <benchmark/benchmark.h>

#include <random>

#include "qmrom/kernels.hpp"
#include "qmrom/manifold.hpp"

using namespace qmrom;

namespace {

Matrix random_matrix(Index rows, Index cols, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> dist;
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(eng);
  }
  return m;
}

using QuadFn = void (*)(const Matrix&, const std::vector<IndexPair>&, Matrix&);
using LapFn = void (*)(const Vector&, Index, Index, double, double, Vector&);
using ProxFn = void (*)(const Matrix&, double, Matrix&);
using SolveFn = void (*)(const Eigen::LLT<Matrix>&, const Matrix&, Matrix&);
using DecodeFn = void (*)(const Vector&, const Matrix&, const Matrix&,
                          const std::vector<IndexPair>&, const Matrix&, Matrix&);

// r = 30 features over the full advection training set.
template <QuadFn F>
void BM_quad_feature_matrix(benchmark::State& state) {
  const Matrix shat = random_matrix(30, state.range(0), 1);
  const auto pairs = QuadFeatureMap::full(30).pairs;
  Matrix out;
  for (auto _ : state) {
    F(shat, pairs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <LapFn F>
void BM_neumann_laplacian(benchmark::State& state) {
  const Index nx = state.range(0), ny = nx / 2;
  const Vector u = random_matrix(nx * ny, 1, 2).col(0);
  Vector out;
  for (auto _ : state) {
    F(u, nx, ny, 0.1, 0.1, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <ProxFn F>
void BM_group_prox(benchmark::State& state) {
  const Matrix r = random_matrix(465, state.range(0), 3);
  Matrix out;
  for (auto _ : state) {
    F(r, 20.0, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <SolveFn F>
void BM_ridge_column_solve(benchmark::State& state) {
  const Matrix a = random_matrix(496, 600, 4);
  const Eigen::LLT<Matrix> llt(a * a.transpose() + Matrix::Identity(496, 496));
  const Matrix rhs = random_matrix(496, state.range(0), 5);
  Matrix out;
  for (auto _ : state) {
    F(llt, rhs, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <DecodeFn F>
void BM_decode_columns(benchmark::State& state) {
  const Index n = 1024, r = 20;
  const auto pairs = QuadFeatureMap::full(r).pairs;
  const Vector s_ref = random_matrix(n, 1, 6).col(0);
  const Matrix V = random_matrix(n, r, 7), vbar = random_matrix(n, Index(pairs.size()), 8);
  const Matrix shat = random_matrix(r, state.range(0), 9);
  Matrix out;
  for (auto _ : state) {
    F(s_ref, V, vbar, pairs, shat, out);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

namespace sk = qmrom::kernels::serial;
namespace pk = qmrom::kernels::parallel;

BENCHMARK(BM_quad_feature_matrix<sk::quad_feature_matrix>)->Name("quad_feature_matrix/serial")->Arg(5000)->UseRealTime();
BENCHMARK(BM_quad_feature_matrix<pk::quad_feature_matrix>)->Name("quad_feature_matrix/parallel")->Arg(5000)->UseRealTime();
BENCHMARK(BM_neumann_laplacian<sk::neumann_laplacian>)->Name("neumann_laplacian/serial")->Arg(96)->Arg(512)->UseRealTime();
BENCHMARK(BM_neumann_laplacian<pk::neumann_laplacian>)->Name("neumann_laplacian/parallel")->Arg(96)->Arg(512)->UseRealTime();
BENCHMARK(BM_group_prox<sk::group_prox>)->Name("group_prox/serial")->Arg(1024)->UseRealTime();
BENCHMARK(BM_group_prox<pk::group_prox>)->Name("group_prox/parallel")->Arg(1024)->UseRealTime();
BENCHMARK(BM_ridge_column_solve<sk::ridge_column_solve>)->Name("ridge_column_solve/serial")->Arg(1024)->UseRealTime();
BENCHMARK(BM_ridge_column_solve<pk::ridge_column_solve>)->Name("ridge_column_solve/parallel")->Arg(1024)->UseRealTime();
BENCHMARK(BM_decode_columns<sk::decode_columns>)->Name("decode_columns/serial")->Arg(1000)->UseRealTime();
BENCHMARK(BM_decode_columns<pk::decode_columns>)->Name("decode_columns/parallel")->Arg(1000)->UseRealTime();

BENCHMARK_MAIN();
