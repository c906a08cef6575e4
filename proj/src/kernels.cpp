#include "semlink/kernels.hpp"

#include <cmath>
#include <vector>

#include "semlink/errors.hpp"

namespace semlink::kernels {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void affine(const DenseLayer& layer, std::span<const double> x, std::span<double> y) {
  const std::size_t out = layer.out;
  for (std::size_t j = 0; j < out; ++j) y[j] = layer.b[j];
  for (std::size_t i = 0; i < layer.in; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    const double* row = layer.w.data() + i * out;
    for (std::size_t j = 0; j < out; ++j) y[j] += xi * row[j];
  }
}

namespace {

void check_rows(const DenseLayer& layer, std::span<const double> x, std::span<double> y) {
  if (layer.in == 0 || x.size() % layer.in != 0 || y.size() != x.size() / layer.in * layer.out) {
    throw DimensionMismatch("affine_rows: buffer sizes do not match the layer shape");
  }
}

}  // namespace

void affine_rows_serial(const DenseLayer& layer, std::span<const double> x, std::span<double> y) {
  check_rows(layer, x, y);
  const std::size_t n = x.size() / layer.in;
  for (std::size_t r = 0; r < n; ++r) {
    affine(layer, x.subspan(r * layer.in, layer.in), y.subspan(r * layer.out, layer.out));
  }
}

void affine_rows_parallel(const DenseLayer& layer, std::span<const double> x, std::span<double> y) {
  check_rows(layer, x, y);
  const auto n = static_cast<std::ptrdiff_t>(x.size() / layer.in);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto row = static_cast<std::size_t>(r);
    affine(layer, x.subspan(row * layer.in, layer.in), y.subspan(row * layer.out, layer.out));
  }
}

double head_score(const SiameseModel& model, std::span<const double> v_h, std::span<const double> v_p) {
  const std::size_t p = model.hidden1.in;
  const std::size_t h = model.hidden1.out;
  // Stack buffers for the shipped shape; heap for anything larger.
  double stack_buf[3 * 256];
  std::vector<double> heap_buf;
  double* buf = stack_buf;
  if (p + 2 * h > 3 * 256) {
    heap_buf.resize(p + 2 * h);
    buf = heap_buf.data();
  }
  std::span<double> d(buf, p), a1(buf + p, h), a2(buf + p + h, h);
  for (std::size_t k = 0; k < p; ++k) d[k] = std::abs(v_h[k] - v_p[k]);
  affine(model.hidden1, d, a1);
  for (double& v : a1) v = v > 0.0 ? v : 0.0;
  affine(model.hidden2, a1, a2);
  for (double& v : a2) v = v > 0.0 ? v : 0.0;
  double logit = 0.0;
  affine(model.output, a2, std::span<double>(&logit, 1));
  return sigmoid(logit);
}

namespace {

void check_pairs(const SiameseModel& model, std::span<const double> projected,
                 std::span<const IndexPair> pairs, std::span<double> scores) {
  const std::size_t p = model.projection.out;
  if (scores.size() != pairs.size() || projected.size() % p != 0) {
    throw DimensionMismatch("head_scores: buffer sizes do not match");
  }
  const std::size_t rows = projected.size() / p;
  for (const auto& [a, b] : pairs) {
    if (a >= rows || b >= rows) throw DimensionMismatch("head_scores: row index out of range");
  }
}

}  // namespace

void head_scores_serial(const SiameseModel& model, std::span<const double> projected,
                        std::span<const IndexPair> pairs, std::span<double> scores) {
  check_pairs(model, projected, pairs, scores);
  const std::size_t p = model.projection.out;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    scores[k] = head_score(model, projected.subspan(pairs[k].first * p, p),
                           projected.subspan(pairs[k].second * p, p));
  }
}

void head_scores_parallel(const SiameseModel& model, std::span<const double> projected,
                          std::span<const IndexPair> pairs, std::span<double> scores) {
  check_pairs(model, projected, pairs, scores);
  const std::size_t p = model.projection.out;
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    const auto& pr = pairs[static_cast<std::size_t>(k)];
    scores[static_cast<std::size_t>(k)] =
        head_score(model, projected.subspan(pr.first * p, p), projected.subspan(pr.second * p, p));
  }
}

}  // namespace semlink::kernels
