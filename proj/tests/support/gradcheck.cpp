#include "gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "semlink/rng.hpp"

namespace semlink::testing {

namespace {

GradInstance draw_instance(Rng& rng, std::uint64_t seed, const ModelShape& shape, bool with_dropout) {
  GradInstance inst;
  inst.model = SiameseModel::initialize(shape, with_dropout ? 0.25 : 0.0, seed * 7 + 1);
  // Non-zero biases exercise the bias gradients.
  for (auto t : parameter_tensors(inst.model)) {
    for (double& v : t) v += rng.uniform(-0.1, 0.1);
  }
  const std::size_t n = 1 + rng.below(4);
  inst.inputs.reserve(3 * n);
  for (std::size_t i = 0; i < 3 * n; ++i) {
    std::vector<double> x(shape.dim_in);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    inst.inputs.push_back(std::move(x));
  }
  for (std::size_t i = 0; i < n; ++i) {
    inst.batch.push_back({inst.inputs[3 * i], inst.inputs[3 * i + 1], inst.inputs[3 * i + 2]});
  }
  if (with_dropout) {
    for (std::size_t i = 0; i < n; ++i) {
      inst.masks.push_back({draw_dropout_masks(inst.model, rng), draw_dropout_masks(inst.model, rng)});
    }
  }
  inst.weights.lambda_triplet = rng.uniform() < 0.5 ? 0.0 : rng.uniform(0.1, 1.0);
  inst.weights.lambda_bce = 1.0;
  inst.weights.margin = 1.0;
  return inst;
}

// Smallest distance of any non-differentiable point of the loss (ReLU
// inputs, |v_h - v_p| components, the triplet hinge) from zero.
double kink_distance(const GradInstance& inst) {
  double m = INFINITY;
  for (std::size_t i = 0; i < inst.batch.size(); ++i) {
    const TrainingTriplet& t = inst.batch[i];
    const TripletMasks* masks = inst.masks.empty() ? nullptr : &inst.masks[i];
    for (int branch = 0; branch < 2; ++branch) {
      const auto& other = branch == 0 ? t.positive : t.negative;
      const DropoutMasks* dm = masks ? (branch == 0 ? &masks->positive : &masks->negative) : nullptr;
      const Activations a = forward_with_masks(inst.model, t.anchor, other, dm);
      for (double v : a.d) m = std::min(m, v);
      for (double v : a.z1) m = std::min(m, std::abs(v));
      for (double v : a.z2) m = std::min(m, std::abs(v));
    }
    if (inst.weights.lambda_triplet > 0.0) {
      const auto va = project(inst.model, t.anchor);
      const auto vp = project(inst.model, t.positive);
      const auto vn = project(inst.model, t.negative);
      double dp = 0.0, dn = 0.0;
      for (std::size_t k = 0; k < va.size(); ++k) {
        dp += (va[k] - vp[k]) * (va[k] - vp[k]);
        dn += (va[k] - vn[k]) * (va[k] - vn[k]);
      }
      m = std::min(m, std::abs(dp - dn + inst.weights.margin));
    }
  }
  return m;
}

}  // namespace

GradInstance random_grad_instance(std::uint64_t seed, const ModelShape& shape, bool with_dropout) {
  static constexpr double kMinKinkDistance = 1e-3;
  Rng rng(seed);
  for (;;) {
    GradInstance inst = draw_instance(rng, seed, shape, with_dropout);
    if (kink_distance(inst) >= kMinKinkDistance) return inst;
  }
}

namespace {

double batch_loss(const GradInstance& inst) {
  double sum = 0.0;
  for (std::size_t i = 0; i < inst.batch.size(); ++i) {
    sum += total_loss(inst.model, inst.batch[i], inst.weights, inst.masks.empty() ? nullptr : &inst.masks[i]);
  }
  return sum / static_cast<double>(inst.batch.size());
}

}  // namespace

GradCheckResult finite_difference_check(GradInstance& inst, double step, double floor) {
  SiameseModel grads = SiameseModel::zeros(inst.model.shape(), inst.model.dropout_rate);
  loss_and_gradients(inst.model, inst.batch, inst.weights, inst.masks, grads);
  GradCheckResult result;
  auto params = parameter_tensors(inst.model);
  const auto analytic = parameter_tensors(std::as_const(grads));
  for (std::size_t t = 0; t < params.size(); ++t) {
    for (std::size_t k = 0; k < params[t].size(); ++k) {
      const double saved = params[t][k];
      params[t][k] = saved + step;
      const double up = batch_loss(inst);
      params[t][k] = saved - step;
      const double down = batch_loss(inst);
      params[t][k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[t][k];
      ++result.parameters;
      if (params[t].data() == inst.model.projection.b.data()) {
        result.cancelling_analytic_max = std::max(result.cancelling_analytic_max, std::abs(a));
        result.cancelling_numeric_max = std::max(result.cancelling_numeric_max, std::abs(numeric));
        continue;
      }
      const double denom = std::max({std::abs(a), std::abs(numeric), floor});
      result.max_relative_error = std::max(result.max_relative_error, std::abs(a - numeric) / denom);
    }
  }
  return result;
}

}  // namespace semlink::testing
