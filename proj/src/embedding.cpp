#include "semlink/embedding.hpp"

#include <chrono>
#include <cmath>
#include <thread>
#include <unordered_set>

#include <json.hpp>

#include "semlink/errors.hpp"
#include "semlink/http_client.hpp"
#include "semlink/text.hpp"

namespace semlink {

using nlohmann::json;

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.size() != kEmbeddingDim) {
    throw DimensionMismatch("embedding has " + std::to_string(values_.size()) +
                            " dimensions, expected " + std::to_string(kEmbeddingDim));
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw DimensionMismatch("embedding has a non-finite entry");
  }
}

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  double dot = 0.0;
  for (std::size_t i = 0; i < kEmbeddingDim; ++i) dot += a[i] * b[i];
  const double denom = a.norm() * b.norm();
  return denom == 0.0 ? 0.0 : dot / denom;
}

void require_standard_dim(const EmbeddingProvider& provider) {
  if (provider.dim() != kEmbeddingDim) {
    throw DimensionMismatch("provider " + provider.descriptor().key() + " declares dimension " +
                            std::to_string(provider.dim()) + ", expected " +
                            std::to_string(kEmbeddingDim));
  }
}

EmbeddingVector hash_embed(std::string_view s) {
  std::vector<double> v(kEmbeddingDim, 0.0);
  auto add = [&](std::string_view feature, double weight) {
    const std::uint64_t h = text::fnv1a64(feature);
    const std::uint64_t sign_bits = text::fnv1a64(feature, 0x84222325cbf29ce4ULL);
    v[h % kEmbeddingDim] += (sign_bits >> 63) ? -weight : weight;
  };
  for (const auto& tok : text::tokenize(s)) {
    add("w:" + tok, 1.0);
    const std::u32string cps = text::decode_utf8(tok);
    if (!cps.empty() && text::is_cjk(cps.front())) continue;
    const std::u32string padded = U"<" + cps + U">";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
      add("t:" + text::encode_utf8(std::u32string_view(padded).substr(i, 3)), 0.5);
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return EmbeddingVector(std::move(v));
}

std::vector<EmbeddingVector> HashEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embed(t));
  return out;
}

namespace {

std::string embed_url(const std::string& endpoint) {
  std::string url = endpoint;
  while (!url.empty() && url.back() == '/') url.pop_back();
  if (!url.ends_with("/embed")) url += "/embed";
  return url;
}

struct RemoteBatch {
  std::vector<EmbeddingVector> vectors;
  std::string model;
};

RemoteBatch request_batch(const std::vector<std::string>& texts, const RemoteEmbedConfig& config) {
  const std::string url = embed_url(config.endpoint);
  const std::string body = json{{"texts", texts}}.dump();
  http::Options opts;
  opts.timeout_s = config.timeout_s;

  http::Response res;
  double backoff = config.retry_backoff_s;
  for (int attempt = 1;; ++attempt) {
    try {
      res = http::post_json(url, body, opts);
      break;
    } catch (const TransportFailure&) {
      if (attempt >= config.max_attempts) throw;
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
  }
  if (res.status != 200) throw ServerRejection(res.status, res.body);

  json doc;
  try {
    doc = json::parse(res.body);
  } catch (const json::exception& e) {
    throw ProtocolViolation(std::string("response is not JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vectors") || !doc["vectors"].is_array()) {
    throw ProtocolViolation("response lacks a vectors array");
  }
  if (doc.contains("dim") && (!doc["dim"].is_number_integer() || doc["dim"].get<long long>() != 512)) {
    throw ProtocolViolation("response advertises dim " + doc["dim"].dump());
  }
  const json& vectors = doc["vectors"];
  if (vectors.size() != texts.size()) {
    throw ProtocolViolation("response has " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
  }
  RemoteBatch out;
  out.model = doc.value("model", std::string("unknown"));
  out.vectors.reserve(vectors.size());
  for (const json& v : vectors) {
    if (!v.is_array() || v.size() != kEmbeddingDim) {
      throw ProtocolViolation("vector of dimension " + std::to_string(v.is_array() ? v.size() : 0) +
                              ", expected 512");
    }
    std::vector<double> values;
    values.reserve(kEmbeddingDim);
    for (const json& x : v) {
      if (!x.is_number()) throw ProtocolViolation("vector entry is not a number");
      values.push_back(x.get<double>());
    }
    if (config.normalize_remote) {
      double n = 0.0;
      for (double x : values) n += x * x;
      n = std::sqrt(n);
      if (n > 0.0) {
        for (double& x : values) x /= n;
      }
    }
    try {
      out.vectors.emplace_back(std::move(values));
    } catch (const DimensionMismatch& e) {
      throw ProtocolViolation(e.what());
    }
  }
  return out;
}

}  // namespace

std::vector<EmbeddingVector> remote_embed(const std::vector<std::string>& texts,
                                          const RemoteEmbedConfig& config) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t batch = std::max<std::size_t>(1, std::min(config.max_batch, kMaxRemoteBatch));
  for (std::size_t i = 0; i < texts.size(); i += batch) {
    const std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                         texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + batch)));
    auto part = request_batch(chunk, config);
    for (auto& v : part.vectors) out.push_back(std::move(v));
  }
  return out;
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t batch = std::max<std::size_t>(1, std::min(config_.max_batch, kMaxRemoteBatch));
  for (std::size_t i = 0; i < texts.size(); i += batch) {
    const std::vector<std::string> chunk(texts.begin() + static_cast<std::ptrdiff_t>(i),
                                         texts.begin() + static_cast<std::ptrdiff_t>(std::min(texts.size(), i + batch)));
    auto part = request_batch(chunk, config_);
    {
      std::lock_guard lock(mu_);
      ++requests_;
      model_ = part.model;
    }
    for (auto& v : part.vectors) out.push_back(std::move(v));
  }
  return out;
}

ProviderDescriptor RemoteEmbedder::descriptor() const {
  // Keyed by endpoint rather than the advertised model so the key is stable
  // before the first request.
  return {"remote", config_.endpoint};
}

std::size_t RemoteEmbedder::requests() const {
  std::lock_guard lock(mu_);
  return requests_;
}

std::shared_ptr<const EmbeddingVector> EmbeddingCache::lookup(const Key& key) {
  std::lock_guard lock(mu_);
  const auto it = index_.find(key);
  if (it == index_.end()) {
    ++misses_;
    return nullptr;
  }
  ++hits_;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->value;
}

void EmbeddingCache::insert(const Key& key, std::shared_ptr<const EmbeddingVector> value) {
  if (capacity_ == 0) return;
  std::lock_guard lock(mu_);
  if (const auto it = index_.find(key); it != index_.end()) {
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  lru_.push_front({key, std::move(value)});
  index_[key] = lru_.begin();
  while (lru_.size() > capacity_) {
    index_.erase(lru_.back().key);
    lru_.pop_back();
  }
}

std::vector<EmbeddingVector> EmbeddingCache::embed(EmbeddingProvider& provider,
                                                   const std::vector<std::string>& texts) {
  const std::string prefix = provider.descriptor().key() + '\x1f';
  std::vector<std::shared_ptr<const EmbeddingVector>> found(texts.size());
  std::vector<std::string> missing;
  std::unordered_map<std::string, std::size_t> missing_index;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (missing_index.contains(texts[i])) continue;
    found[i] = lookup(prefix + texts[i]);
    if (!found[i]) {
      missing_index.emplace(texts[i], missing.size());
      missing.push_back(texts[i]);
    }
  }
  std::vector<std::shared_ptr<const EmbeddingVector>> fresh;
  if (!missing.empty()) {
    auto vectors = provider.embed_batch(missing);
    if (vectors.size() != missing.size()) {
      throw DimensionMismatch("provider returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(missing.size()) + " texts");
    }
    fresh.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      fresh.push_back(std::make_shared<const EmbeddingVector>(std::move(vectors[i])));
      insert(prefix + missing[i], fresh.back());
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (found[i]) {
      out.push_back(*found[i]);
    } else {
      out.push_back(*fresh[missing_index.at(texts[i])]);
    }
  }
  return out;
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mu_);
  return lru_.size();
}
std::size_t EmbeddingCache::hits() const {
  std::lock_guard lock(mu_);
  return hits_;
}
std::size_t EmbeddingCache::misses() const {
  std::lock_guard lock(mu_);
  return misses_;
}

std::vector<EmbeddingVector> embed_cached(EmbeddingProvider& provider, EmbeddingCache& cache,
                                          const std::vector<std::string>& texts) {
  return cache.embed(provider, texts);
}

}  // namespace semlink
