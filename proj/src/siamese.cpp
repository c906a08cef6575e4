#include "semlink/siamese.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "semlink/errors.hpp"
#include "semlink/kernels.hpp"

namespace semlink {

using nlohmann::json;

SiameseModel SiameseModel::zeros(const ModelShape& s, double dropout_rate) {
  SiameseModel m;
  m.projection = DenseLayer(s.dim_in, s.dim_proj);
  m.hidden1 = DenseLayer(s.dim_proj, s.dim_hidden);
  m.hidden2 = DenseLayer(s.dim_hidden, s.dim_hidden);
  m.output = DenseLayer(s.dim_hidden, 1);
  m.dropout_rate = dropout_rate;
  return m;
}

SiameseModel SiameseModel::initialize(const ModelShape& s, double dropout_rate, std::uint64_t seed) {
  SiameseModel m = zeros(s, dropout_rate);
  Rng rng(seed);
  auto fill = [&](DenseLayer& layer, double limit) {
    for (double& w : layer.w) w = rng.uniform(-limit, limit);
  };
  auto glorot = [](const DenseLayer& l) { return std::sqrt(6.0 / static_cast<double>(l.in + l.out)); };
  auto he = [](const DenseLayer& l) { return std::sqrt(6.0 / static_cast<double>(l.in)); };
  fill(m.projection, glorot(m.projection));
  fill(m.hidden1, he(m.hidden1));
  fill(m.hidden2, he(m.hidden2));
  fill(m.output, glorot(m.output));
  return m;
}

std::size_t SiameseModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : parameter_tensors(*this)) n += t.size();
  return n;
}

std::vector<std::span<double>> parameter_tensors(SiameseModel& m) {
  return {m.projection.w, m.projection.b, m.hidden1.w, m.hidden1.b,
          m.hidden2.w,    m.hidden2.b,    m.output.w,  m.output.b};
}

std::vector<std::span<const double>> parameter_tensors(const SiameseModel& m) {
  return {m.projection.w, m.projection.b, m.hidden1.w, m.hidden1.b,
          m.hidden2.w,    m.hidden2.b,    m.output.w,  m.output.b};
}

DropoutMasks draw_dropout_masks(const SiameseModel& model, Rng& rng) {
  DropoutMasks masks;
  const double p = model.dropout_rate;
  const double keep_scale = p > 0.0 ? 1.0 / (1.0 - p) : 1.0;
  auto draw = [&](std::vector<double>& m, std::size_t n) {
    m.resize(n);
    for (double& v : m) v = (p > 0.0 && rng.uniform() < p) ? 0.0 : keep_scale;
  };
  draw(masks.hidden1, model.hidden1.out);
  draw(masks.hidden2, model.hidden2.out);
  return masks;
}

namespace {

void check_input(const SiameseModel& model, std::span<const double> e, const char* which) {
  if (e.size() != model.projection.in) {
    throw DimensionMismatch(std::string(which) + " has " + std::to_string(e.size()) +
                            " dimensions, model expects " + std::to_string(model.projection.in));
  }
  for (double v : e) {
    if (!std::isfinite(v)) throw DimensionMismatch(std::string(which) + " has a non-finite entry");
  }
}

void apply_dropout_relu(std::vector<double>& z, const std::vector<double>* mask,
                        std::vector<double>& a) {
  a.resize(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double v = mask ? z[j] * (*mask)[j] : z[j];
    a[j] = v > 0.0 ? v : 0.0;
  }
}

}  // namespace

std::vector<double> project(const SiameseModel& model, std::span<const double> e) {
  std::vector<double> v(model.projection.out);
  kernels::affine(model.projection, e, v);
  return v;
}

Activations forward_with_masks(const SiameseModel& model, std::span<const double> e_h,
                               std::span<const double> e_p, const DropoutMasks* masks) {
  check_input(model, e_h, "e_h");
  check_input(model, e_p, "e_p");
  Activations act;
  act.x_h.assign(e_h.begin(), e_h.end());
  act.x_p.assign(e_p.begin(), e_p.end());
  act.v_h = project(model, e_h);
  act.v_p = project(model, e_p);
  act.d.resize(act.v_h.size());
  for (std::size_t k = 0; k < act.d.size(); ++k) act.d[k] = std::abs(act.v_h[k] - act.v_p[k]);

  const bool dropout = masks && !masks->hidden1.empty();
  if (dropout) act.masks = *masks;
  act.z1.resize(model.hidden1.out);
  kernels::affine(model.hidden1, act.d, act.z1);
  apply_dropout_relu(act.z1, dropout ? &act.masks.hidden1 : nullptr, act.a1);
  act.z2.resize(model.hidden2.out);
  kernels::affine(model.hidden2, act.a1, act.z2);
  apply_dropout_relu(act.z2, dropout ? &act.masks.hidden2 : nullptr, act.a2);
  kernels::affine(model.output, act.a2, std::span<double>(&act.logit, 1));
  act.score = kernels::sigmoid(act.logit);
  return act;
}

Activations forward(const SiameseModel& model, std::span<const double> e_h,
                    std::span<const double> e_p, Mode mode, Rng* rng) {
  if (mode == Mode::Train && rng && model.dropout_rate > 0.0) {
    const DropoutMasks masks = draw_dropout_masks(model, *rng);
    return forward_with_masks(model, e_h, e_p, &masks);
  }
  return forward_with_masks(model, e_h, e_p, nullptr);
}

double score(const SiameseModel& model, std::span<const double> e_h, std::span<const double> e_p) {
  return forward_with_masks(model, e_h, e_p, nullptr).score;
}

double bce_loss(int y, double y_hat) {
  const double p = std::clamp(y_hat, kBceEpsilon, 1.0 - kBceEpsilon);
  return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

double triplet_loss_projected(std::span<const double> v_a, std::span<const double> v_p,
                              std::span<const double> v_n, double margin) {
  double pos = 0.0, neg = 0.0;
  for (std::size_t k = 0; k < v_a.size(); ++k) {
    pos += (v_a[k] - v_p[k]) * (v_a[k] - v_p[k]);
    neg += (v_a[k] - v_n[k]) * (v_a[k] - v_n[k]);
  }
  return std::max(0.0, pos - neg + margin);
}

double triplet_loss(const SiameseModel& model, const TrainingTriplet& t, double margin) {
  return triplet_loss_projected(project(model, t.anchor), project(model, t.positive),
                                project(model, t.negative), margin);
}

double total_loss(const SiameseModel& model, const TrainingTriplet& t, const LossWeights& w,
                  const TripletMasks* masks) {
  double loss = 0.0;
  if (w.lambda_triplet != 0.0) loss += w.lambda_triplet * triplet_loss(model, t, w.margin);
  if (w.lambda_bce != 0.0) {
    const auto ap = forward_with_masks(model, t.anchor, t.positive, masks ? &masks->positive : nullptr);
    const auto an = forward_with_masks(model, t.anchor, t.negative, masks ? &masks->negative : nullptr);
    loss += w.lambda_bce * (bce_loss(1, ap.score) + bce_loss(0, an.score));
  }
  return loss;
}

namespace {

void zero(SiameseModel& g) {
  for (auto t : parameter_tensors(g)) std::fill(t.begin(), t.end(), 0.0);
}

// grad_w += x^T g, grad_b += g; returns dL/dx when `dx` is non-null.
void accumulate_affine(const DenseLayer& layer, DenseLayer& grad, std::span<const double> x,
                       std::span<const double> g, std::vector<double>* dx) {
  const std::size_t out = layer.out;
  for (std::size_t j = 0; j < out; ++j) grad.b[j] += g[j];
  if (dx) dx->assign(layer.in, 0.0);
  for (std::size_t i = 0; i < layer.in; ++i) {
    const double xi = x[i];
    if (!dx && xi == 0.0) continue;
    double* gw = grad.w.data() + i * out;
    const double* w = layer.w.data() + i * out;
    double acc = 0.0;
    for (std::size_t j = 0; j < out; ++j) {
      if (xi != 0.0) gw[j] += xi * g[j];
      acc += w[j] * g[j];
    }
    if (dx) (*dx)[i] = acc;
  }
}

// Backpropagates dL/dlogit through the head; returns dL/dv_h (dL/dv_p is its negation).
std::vector<double> backprop_head(const SiameseModel& model, const Activations& act, double g_logit,
                                  SiameseModel& grads) {
  std::vector<double> g_out{g_logit};
  std::vector<double> g_a2;
  accumulate_affine(model.output, grads.output, act.a2, g_out, &g_a2);

  const bool dropout = !act.masks.hidden1.empty();
  std::vector<double> g_z2(g_a2.size());
  for (std::size_t j = 0; j < g_z2.size(); ++j) {
    const double m = dropout ? act.masks.hidden2[j] : 1.0;
    g_z2[j] = act.z2[j] * m > 0.0 ? g_a2[j] * m : 0.0;
  }
  std::vector<double> g_a1;
  accumulate_affine(model.hidden2, grads.hidden2, act.a1, g_z2, &g_a1);

  std::vector<double> g_z1(g_a1.size());
  for (std::size_t j = 0; j < g_z1.size(); ++j) {
    const double m = dropout ? act.masks.hidden1[j] : 1.0;
    g_z1[j] = act.z1[j] * m > 0.0 ? g_a1[j] * m : 0.0;
  }
  std::vector<double> g_d;
  accumulate_affine(model.hidden1, grads.hidden1, act.d, g_z1, &g_d);

  std::vector<double> g_vh(g_d.size());
  for (std::size_t k = 0; k < g_d.size(); ++k) {
    const double diff = act.v_h[k] - act.v_p[k];
    const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
    g_vh[k] = g_d[k] * sign;
  }
  return g_vh;
}

// dL/dlogit of the clamped BCE composed with the sigmoid.
double bce_logit_gradient(int y, double y_hat) {
  if (y_hat < kBceEpsilon || y_hat > 1.0 - kBceEpsilon) return 0.0;
  return y_hat - static_cast<double>(y);
}

}  // namespace

double loss_and_gradients(const SiameseModel& model, std::span<const TrainingTriplet> batch,
                          const LossWeights& w, std::span<const TripletMasks> masks,
                          SiameseModel& grads) {
  if (grads.shape() != model.shape()) grads = SiameseModel::zeros(model.shape(), model.dropout_rate);
  zero(grads);
  if (batch.empty()) return 0.0;
  const bool use_masks = !masks.empty();
  if (use_masks && masks.size() != batch.size()) {
    throw DimensionMismatch("one mask set per triplet is required");
  }

  const std::size_t p = model.projection.out;
  std::vector<double> g_va(p), g_vp(p), g_vn(p);
  double total = 0.0;
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const TrainingTriplet& t = batch[n];
    std::fill(g_va.begin(), g_va.end(), 0.0);
    std::fill(g_vp.begin(), g_vp.end(), 0.0);
    std::fill(g_vn.begin(), g_vn.end(), 0.0);

    if (w.lambda_bce != 0.0) {
      const auto ap = forward_with_masks(model, t.anchor, t.positive, use_masks ? &masks[n].positive : nullptr);
      const auto an = forward_with_masks(model, t.anchor, t.negative, use_masks ? &masks[n].negative : nullptr);
      total += w.lambda_bce * (bce_loss(1, ap.score) + bce_loss(0, an.score));
      const auto g1 = backprop_head(model, ap, w.lambda_bce * bce_logit_gradient(1, ap.score), grads);
      const auto g0 = backprop_head(model, an, w.lambda_bce * bce_logit_gradient(0, an.score), grads);
      for (std::size_t k = 0; k < p; ++k) {
        g_va[k] += g1[k] + g0[k];
        g_vp[k] -= g1[k];
        g_vn[k] -= g0[k];
      }
    }
    if (w.lambda_triplet != 0.0) {
      const auto va = project(model, t.anchor);
      const auto vp = project(model, t.positive);
      const auto vn = project(model, t.negative);
      const double hinge = triplet_loss_projected(va, vp, vn, w.margin);
      total += w.lambda_triplet * hinge;
      if (hinge > 0.0) {
        for (std::size_t k = 0; k < p; ++k) {
          g_va[k] += w.lambda_triplet * 2.0 * (vn[k] - vp[k]);
          g_vp[k] += w.lambda_triplet * -2.0 * (va[k] - vp[k]);
          g_vn[k] += w.lambda_triplet * 2.0 * (va[k] - vn[k]);
        }
      }
    }
    // The shared projection collects gradient from every branch it fed.
    accumulate_affine(model.projection, grads.projection, t.anchor, g_va, nullptr);
    accumulate_affine(model.projection, grads.projection, t.positive, g_vp, nullptr);
    accumulate_affine(model.projection, grads.projection, t.negative, g_vn, nullptr);
  }
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (auto tensor : parameter_tensors(grads)) {
    for (double& g : tensor) g *= scale;
  }
  return total * scale;
}

AdamState AdamState::for_model(const SiameseModel& model) {
  AdamState s;
  s.first_moment = SiameseModel::zeros(model.shape(), model.dropout_rate);
  s.second_moment = SiameseModel::zeros(model.shape(), model.dropout_rate);
  return s;
}

void adam_step(SiameseModel& params, const SiameseModel& grads, AdamState& state, double lr) {
  if (state.first_moment.shape() != params.shape()) state = AdamState::for_model(params);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto p = parameter_tensors(params);
  const auto g = parameter_tensors(grads);
  auto m = parameter_tensors(state.first_moment);
  auto v = parameter_tensors(state.second_moment);
  for (std::size_t k = 0; k < p.size(); ++k) {
    for (std::size_t i = 0; i < p[k].size(); ++i) {
      const double gi = g[k][i];
      m[k][i] = state.beta1 * m[k][i] + (1.0 - state.beta1) * gi;
      v[k][i] = state.beta2 * v[k][i] + (1.0 - state.beta2) * gi * gi;
      const double m_hat = m[k][i] / correction1;
      const double v_hat = v[k][i] / correction2;
      p[k][i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

namespace {

json layer_to_json(const DenseLayer& l) {
  json rows = json::array();
  for (std::size_t i = 0; i < l.in; ++i) {
    rows.push_back(std::vector<double>(l.w.begin() + static_cast<std::ptrdiff_t>(i * l.out),
                                       l.w.begin() + static_cast<std::ptrdiff_t>((i + 1) * l.out)));
  }
  return {{"w", std::move(rows)}, {"b", l.b}};
}

DenseLayer layer_from_json(const json& doc, const char* name, std::size_t in, std::size_t out) {
  if (!doc.contains(name) || !doc[name].is_object()) throw IoFailure(std::string("checkpoint lacks layer ") + name);
  const json& j = doc[name];
  if (!j.contains("w") || !j["w"].is_array() || !j.contains("b") || !j["b"].is_array()) {
    throw IoFailure(std::string("layer ") + name + " lacks w or b");
  }
  const json& rows = j["w"];
  const std::size_t cols = rows.empty() || !rows[0].is_array() ? 0 : rows[0].size();
  if (rows.size() != in || cols != out) {
    throw ShapeMismatch(std::string("layer ") + name + " is " + std::to_string(rows.size()) + "x" +
                        std::to_string(cols) + ", expected " + std::to_string(in) + "x" +
                        std::to_string(out));
  }
  DenseLayer l(in, out);
  for (std::size_t i = 0; i < in; ++i) {
    if (!rows[i].is_array() || rows[i].size() != out) {
      throw ShapeMismatch(std::string("layer ") + name + " has a ragged row " + std::to_string(i));
    }
    for (std::size_t k = 0; k < out; ++k) {
      const json& v = rows[i][k];
      if (!v.is_number()) throw IoFailure(std::string("layer ") + name + " has a non-numeric weight");
      l.w[i * out + k] = v.get<double>();
    }
  }
  if (j["b"].size() != out) {
    throw ShapeMismatch(std::string("layer ") + name + " bias has " + std::to_string(j["b"].size()) +
                        " entries, expected " + std::to_string(out));
  }
  for (std::size_t k = 0; k < out; ++k) {
    if (!j["b"][k].is_number()) throw IoFailure(std::string("layer ") + name + " has a non-numeric bias");
    l.b[k] = j["b"][k].get<double>();
  }
  return l;
}

}  // namespace

json model_to_json(const SiameseModel& m) {
  const ModelShape s = m.shape();
  return {{"format", kModelFormat},
          {"dim_in", s.dim_in},
          {"dim_proj", s.dim_proj},
          {"dim_hidden", s.dim_hidden},
          {"dropout", m.dropout_rate},
          {"layers",
           {{"projection", layer_to_json(m.projection)},
            {"hidden1", layer_to_json(m.hidden1)},
            {"hidden2", layer_to_json(m.hidden2)},
            {"output", layer_to_json(m.output)}}},
          {"train_fingerprint", m.train_fingerprint}};
}

SiameseModel model_from_json(const json& doc) {
  if (!doc.is_object()) throw IoFailure("checkpoint is not a JSON object");
  const auto format = doc.find("format");
  if (format == doc.end() || !format->is_string()) throw IoFailure("checkpoint lacks a format tag");
  if (format->get<std::string>() != kModelFormat) {
    throw VersionMismatch("checkpoint format " + format->get<std::string>() + ", expected " +
                          std::string(kModelFormat));
  }
  auto dim = [&](const char* key, std::size_t fallback) -> std::size_t {
    const auto it = doc.find(key);
    if (it == doc.end()) return fallback;
    if (!it->is_number_integer() || it->get<std::int64_t>() <= 0) {
      throw IoFailure(std::string("checkpoint field ") + key + " must be a positive integer");
    }
    return it->get<std::size_t>();
  };
  ModelShape s;
  s.dim_in = dim("dim_in", 0);
  s.dim_proj = dim("dim_proj", 0);
  if (s.dim_in == 0 || s.dim_proj == 0) throw IoFailure("checkpoint lacks dim_in or dim_proj");
  s.dim_hidden = dim("dim_hidden", s.dim_proj);
  if (!doc.contains("layers") || !doc["layers"].is_object()) throw IoFailure("checkpoint lacks layers");
  if (!doc.contains("dropout") || !doc["dropout"].is_number()) throw IoFailure("checkpoint lacks dropout");

  SiameseModel m;
  const json& layers = doc["layers"];
  m.projection = layer_from_json(layers, "projection", s.dim_in, s.dim_proj);
  m.hidden1 = layer_from_json(layers, "hidden1", s.dim_proj, s.dim_hidden);
  m.hidden2 = layer_from_json(layers, "hidden2", s.dim_hidden, s.dim_hidden);
  m.output = layer_from_json(layers, "output", s.dim_hidden, 1);
  m.dropout_rate = doc["dropout"].get<double>();
  if (!(m.dropout_rate >= 0.0 && m.dropout_rate < 1.0)) throw IoFailure("dropout must be in [0, 1)");
  m.train_fingerprint = doc.value("train_fingerprint", json::object());
  return m;
}

void save_model(const SiameseModel& model, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write checkpoint " + tmp.string());
    out << model_to_json(model).dump() << '\n';
    out.flush();
    if (!out) throw IoFailure("failed writing checkpoint " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot move checkpoint into place: " + ec.message());
}

SiameseModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw IoFailure("checkpoint " + path.string() + " is corrupt: " + e.what());
  }
  return model_from_json(doc);
}

}  // namespace semlink
