#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "semlink/model.hpp"
#include "semlink/rng.hpp"

namespace semlink {

/// Per-unit inverted-dropout multipliers (0 or 1/(1-rate)) for both hidden
/// layers. Empty vectors mean dropout is off.
struct DropoutMasks {
  std::vector<double> hidden1;
  std::vector<double> hidden2;
};

DropoutMasks draw_dropout_masks(const SiameseModel& model, Rng& rng);

/// Everything backward() needs from one forward pass.
struct Activations {
  std::vector<double> x_h, x_p;  // inputs
  std::vector<double> v_h, v_p;  // shared projection outputs
  std::vector<double> d;         // |v_h - v_p|
  std::vector<double> z1, a1;    // hidden1 pre-activation, post dropout+ReLU
  std::vector<double> z2, a2;
  DropoutMasks masks;
  double logit = 0.0;
  double score = 0.0;
};

enum class Mode { Eval, Train };

/// Throws DimensionMismatch unless both inputs match the model's input width
/// and are finite. In Train mode masks are drawn from `rng`.
Activations forward(const SiameseModel& model, std::span<const double> e_h,
                    std::span<const double> e_p, Mode mode, Rng* rng = nullptr);

/// Forward pass with caller-supplied masks (nullptr: no dropout).
Activations forward_with_masks(const SiameseModel& model, std::span<const double> e_h,
                               std::span<const double> e_p, const DropoutMasks* masks);

/// Eval-mode score.
double score(const SiameseModel& model, std::span<const double> e_h, std::span<const double> e_p);

/// Shared projection of a single input.
std::vector<double> project(const SiameseModel& model, std::span<const double> e);

inline constexpr double kBceEpsilon = 1e-7;

/// Binary cross-entropy with the prediction clamped to [eps, 1 - eps].
double bce_loss(int y, double y_hat);

/// One (anchor, positive, negative) input triple. Views into caller storage.
struct TrainingTriplet {
  std::span<const double> anchor;
  std::span<const double> positive;
  std::span<const double> negative;
};

/// max(0, |v_a - v_p|^2 - |v_a - v_n|^2 + margin) on projected vectors.
double triplet_loss_projected(std::span<const double> v_a, std::span<const double> v_p,
                              std::span<const double> v_n, double margin);
double triplet_loss(const SiameseModel& model, const TrainingTriplet& t, double margin);

struct LossWeights {
  double lambda_triplet = 0.0;
  double lambda_bce = 1.0;
  double margin = 1.0;
};

/// Masks for the (A,P) and (A,N) forward passes of one triplet.
struct TripletMasks {
  DropoutMasks positive;
  DropoutMasks negative;
};

/// lambda_triplet * triplet + lambda_bce * (BCE(1, s(A,P)) + BCE(0, s(A,N))).
double total_loss(const SiameseModel& model, const TrainingTriplet& t, const LossWeights& weights,
                  const TripletMasks* masks = nullptr);

/// Mean total loss over the batch; `grads` receives the mean gradient (same
/// shape as the model, overwritten). `masks` is empty (no dropout) or one
/// entry per triplet.
double loss_and_gradients(const SiameseModel& model, std::span<const TrainingTriplet> batch,
                          const LossWeights& weights, std::span<const TripletMasks> masks,
                          SiameseModel& grads);

struct AdamState {
  SiameseModel first_moment;
  SiameseModel second_moment;
  std::uint64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_model(const SiameseModel& model);
};

/// One bias-corrected Adam update of every parameter.
void adam_step(SiameseModel& params, const SiameseModel& grads, AdamState& state, double lr);

/// Mutable views over the eight parameter tensors in a fixed order.
std::vector<std::span<double>> parameter_tensors(SiameseModel& model);
std::vector<std::span<const double>> parameter_tensors(const SiameseModel& model);

inline constexpr std::string_view kModelFormat = "semlink-model-v1";

nlohmann::json model_to_json(const SiameseModel& model);
/// Throws VersionMismatch, ShapeMismatch or IoFailure (malformed document).
SiameseModel model_from_json(const nlohmann::json& doc);

/// The checkpoint is written to a temporary file and renamed into place.
void save_model(const SiameseModel& model, const std::filesystem::path& path);
SiameseModel load_model(const std::filesystem::path& path);

}  // namespace semlink
