// Serial reference kernels against their OpenMP counterparts.

#include <benchmark/benchmark.h>

#include <vector>

#include "semlink/embedding.hpp"
#include "semlink/kernels.hpp"
#include "semlink/rng.hpp"
#include "semlink/siamese.hpp"

using namespace semlink;

namespace {

const SiameseModel& model() {
  static const SiameseModel m = SiameseModel::initialize({}, 0.1, 1);
  return m;
}

// Hashed embeddings of short phrases, as the oracle projects them.
std::vector<double> embedding_rows(std::size_t n) {
  std::vector<double> x;
  x.reserve(n * kEmbeddingDim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto e = hash_embed("feature text number " + std::to_string(i));
    x.insert(x.end(), e.values().begin(), e.values().end());
  }
  return x;
}

template <auto Kernel>
void BM_affine_rows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = embedding_rows(n);
  std::vector<double> y(n * model().projection.out);
  for (auto _ : state) {
    Kernel(model().projection, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <auto Kernel>
void BM_head_scores(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t rows = 256;
  std::vector<double> projected(rows * model().projection.out);
  Rng rng(3);
  for (double& v : projected) v = rng.uniform(-1.0, 1.0);
  std::vector<kernels::IndexPair> pairs(n);
  for (auto& p : pairs) p = {static_cast<std::uint32_t>(rng.below(rows)), static_cast<std::uint32_t>(rng.below(rows))};
  std::vector<double> scores(n);
  for (auto _ : state) {
    Kernel(model(), projected, pairs, scores);
    benchmark::DoNotOptimize(scores.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_affine_rows<kernels::affine_rows_serial>)->Name("affine_rows/serial")->Arg(64)->Arg(1024);
BENCHMARK(BM_affine_rows<kernels::affine_rows_parallel>)->Name("affine_rows/parallel")->Arg(64)->Arg(1024);
BENCHMARK(BM_head_scores<kernels::head_scores_serial>)->Name("head_scores/serial")->Arg(1024)->Arg(16384);
BENCHMARK(BM_head_scores<kernels::head_scores_parallel>)->Name("head_scores/parallel")->Arg(1024)->Arg(16384);

BENCHMARK_MAIN();
