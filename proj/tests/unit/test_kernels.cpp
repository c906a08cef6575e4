#include <doctest.h>

#include <cmath>

#include "semlink/errors.hpp"
#include "semlink/kernels.hpp"
#include "semlink/rng.hpp"
#include "semlink/siamese.hpp"

using namespace semlink;

namespace {

std::vector<double> random_rows(std::size_t n, std::size_t dim, Rng& rng, double sparsity) {
  std::vector<double> x(n * dim);
  for (double& v : x) v = rng.uniform() < sparsity ? 0.0 : rng.uniform(-1.0, 1.0);
  return x;
}

}  // namespace

TEST_CASE("affine matches a naive product") {
  Rng rng(3);
  DenseLayer layer(5, 3);
  for (double& w : layer.w) w = rng.uniform(-1, 1);
  for (double& b : layer.b) b = rng.uniform(-1, 1);
  const std::vector<double> x = {0.5, 0.0, -1.0, 2.0, 0.25};
  std::vector<double> y(3);
  kernels::affine(layer, x, y);
  for (std::size_t j = 0; j < 3; ++j) {
    double expect = layer.b[j];
    for (std::size_t i = 0; i < 5; ++i) expect += x[i] * layer.w[i * 3 + j];
    CHECK(y[j] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("parallel affine rows are bit-identical to serial") {
  Rng rng(5);
  const SiameseModel model = SiameseModel::initialize({512, 128, 128}, 0.1, 9);
  const auto x = random_rows(37, 512, rng, 0.9);
  std::vector<double> ys(37 * 128), yp(37 * 128);
  kernels::affine_rows_serial(model.projection, x, ys);
  kernels::affine_rows_parallel(model.projection, x, yp);
  CHECK(ys == yp);
  std::vector<double> wrong(10);
  CHECK_THROWS_AS(kernels::affine_rows_serial(model.projection, x, wrong), DimensionMismatch);
}

TEST_CASE("head scores: parallel equals serial equals the training forward pass") {
  Rng rng(6);
  const SiameseModel model = SiameseModel::initialize({16, 8, 8}, 0.1, 4);
  const auto emb = random_rows(12, 16, rng, 0.0);
  std::vector<double> proj(12 * 8);
  kernels::affine_rows_serial(model.projection, emb, proj);
  std::vector<kernels::IndexPair> pairs;
  for (std::uint32_t a = 0; a < 12; ++a) {
    for (std::uint32_t b = 0; b < 12; ++b) pairs.emplace_back(a, b);
  }
  std::vector<double> s1(pairs.size()), s2(pairs.size());
  kernels::head_scores_serial(model, proj, pairs, s1);
  kernels::head_scores_parallel(model, proj, pairs, s2);
  CHECK(s1 == s2);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const std::span<const double> a(emb.data() + pairs[k].first * 16, 16);
    const std::span<const double> b(emb.data() + pairs[k].second * 16, 16);
    CHECK(s1[k] == score(model, a, b));
  }
  std::vector<kernels::IndexPair> bad = {{0, 99}};
  std::vector<double> one(1);
  CHECK_THROWS_AS(kernels::head_scores_serial(model, proj, bad, one), DimensionMismatch);
}

TEST_CASE("sigmoid is stable at the extremes") {
  CHECK(kernels::sigmoid(0.0) == 0.5);
  CHECK(kernels::sigmoid(800.0) == 1.0);
  CHECK(kernels::sigmoid(-800.0) == 0.0);
  CHECK(std::isfinite(kernels::sigmoid(-745.0)));
  CHECK(kernels::sigmoid(2.0) == doctest::Approx(1.0 / (1.0 + std::exp(-2.0))));
}
