#pragma once

#include <cstdint>
#include <vector>

#include "semlink/siamese.hpp"

namespace semlink::testing {

/// A random model and batch on a small shape, with inputs held by value so
/// the triplet spans stay valid.
struct GradInstance {
  SiameseModel model;
  std::vector<std::vector<double>> inputs;
  std::vector<TrainingTriplet> batch;
  std::vector<TripletMasks> masks;  // empty or one per triplet
  LossWeights weights;
};

/// Instances are redrawn until every ReLU input, every |v_h - v_p| component
/// and the triplet hinge argument is at least 1e-3 away from its kink.
GradInstance random_grad_instance(std::uint64_t seed, const ModelShape& shape, bool with_dropout);

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t parameters = 0;
  /// The projection bias cancels in |v_h - v_p| and in both triplet
  /// distances, so its exact gradient is zero and the central difference
  /// only sees rounding. Tracked apart from the relative error.
  double cancelling_analytic_max = 0.0;
  double cancelling_numeric_max = 0.0;
};

/// Compares loss_and_gradients against central differences of the batch
/// loss over every parameter. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult finite_difference_check(GradInstance& inst, double step, double floor = 1e-7);

}  // namespace semlink::testing
