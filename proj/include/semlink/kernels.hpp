#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>

#include "semlink/model.hpp"

// Data-parallel inference kernels. Every *_parallel kernel computes each
// output element with exactly the same operation sequence as its *_serial
// reference, so the two agree bit for bit at any thread count.
namespace semlink::kernels {

/// y = x W + b. Zero inputs are skipped, which keeps sparse hashed
/// embeddings cheap without changing the result.
void affine(const DenseLayer& layer, std::span<const double> x, std::span<double> y);

/// Rows of `x` (n x layer.in, row-major) mapped to rows of `y` (n x layer.out).
void affine_rows_serial(const DenseLayer& layer, std::span<const double> x, std::span<double> y);
void affine_rows_parallel(const DenseLayer& layer, std::span<const double> x, std::span<double> y);

/// Eval-mode head on two projected vectors: sigmoid(MLP(|v_h - v_p|)).
double head_score(const SiameseModel& model, std::span<const double> v_h, std::span<const double> v_p);

using IndexPair = std::pair<std::uint32_t, std::uint32_t>;

/// Scores pairs of rows of `projected` (n x dim_proj).
void head_scores_serial(const SiameseModel& model, std::span<const double> projected,
                        std::span<const IndexPair> pairs, std::span<double> scores);
void head_scores_parallel(const SiameseModel& model, std::span<const double> projected,
                          std::span<const IndexPair> pairs, std::span<double> scores);

double sigmoid(double x);

}  // namespace semlink::kernels
