#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <json.hpp>

namespace semlink {

/// Fully connected layer y = x W + b with W stored input-major (in x out).
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> w;  // w[i * out + j]
  std::vector<double> b;

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), w(in_dim * out_dim, 0.0), b(out_dim, 0.0) {}

  bool operator==(const DenseLayer&) const = default;
};

struct ModelShape {
  std::size_t dim_in = 512;
  std::size_t dim_proj = 128;
  std::size_t dim_hidden = 128;
  bool operator==(const ModelShape&) const = default;
};

/// Shared projection followed by a two-hidden-layer MLP with scalar output.
/// The projection exists once; both branches read the same weights.
struct SiameseModel {
  DenseLayer projection;
  DenseLayer hidden1;
  DenseLayer hidden2;
  DenseLayer output;
  double dropout_rate = 0.1;
  nlohmann::json train_fingerprint = nlohmann::json::object();

  /// All-zero parameters of the given shape.
  static SiameseModel zeros(const ModelShape& shape, double dropout_rate = 0.1);
  /// Uniform Glorot for the projection and output, He for the ReLU layers;
  /// zero biases.
  static SiameseModel initialize(const ModelShape& shape, double dropout_rate, std::uint64_t seed);

  ModelShape shape() const { return {projection.in, projection.out, hidden1.out}; }
  std::size_t parameter_count() const;

  bool operator==(const SiameseModel&) const = default;
};

}  // namespace semlink
