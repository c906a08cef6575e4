#pragma once

#include <cstddef>
#include <list>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace semlink {

inline constexpr std::size_t kEmbeddingDim = 512;

/// A 512-dimensional, finite text embedding.
class EmbeddingVector {
 public:
  EmbeddingVector() : values_(kEmbeddingDim, 0.0) {}
  /// Throws DimensionMismatch on a wrong size or a non-finite entry.
  explicit EmbeddingVector(std::vector<double> values);

  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }
  double norm() const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

struct ProviderDescriptor {
  std::string provider;
  std::string model;
  std::string key() const { return provider + "/" + model; }
};

/// Text-to-vector backend. Implementations return one vector per input text,
/// in order, and map equal texts to equal vectors for their whole lifetime.
/// embed_batch may be called from several threads at once.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;
  virtual ProviderDescriptor descriptor() const = 0;
  virtual std::size_t dim() const { return kEmbeddingDim; }
};

/// Throws DimensionMismatch for providers not producing 512-dim vectors.
void require_standard_dim(const EmbeddingProvider& provider);

/// Signed feature hashing of word tokens and character trigrams, scaled to
/// unit length. The empty text maps to the zero vector.
EmbeddingVector hash_embed(std::string_view text);

class HashEmbedder final : public EmbeddingProvider {
 public:
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  ProviderDescriptor descriptor() const override { return {"hash", "semlink-hash-v1"}; }
};

inline constexpr std::size_t kMaxRemoteBatch = 256;

struct RemoteEmbedConfig {
  std::string endpoint;  // base URL, or the full /embed URL
  double timeout_s = 30.0;
  int max_attempts = 3;
  double retry_backoff_s = 0.5;  // doubles per retry
  bool normalize_remote = false;
  std::size_t max_batch = kMaxRemoteBatch;
};

/// Calls the /embed service, splitting inputs into requests of at most
/// `max_batch` texts. Throws TransportFailure, ProtocolViolation or
/// ServerRejection.
std::vector<EmbeddingVector> remote_embed(const std::vector<std::string>& texts,
                                          const RemoteEmbedConfig& config);

class RemoteEmbedder final : public EmbeddingProvider {
 public:
  explicit RemoteEmbedder(RemoteEmbedConfig config) : config_(std::move(config)) {}
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;
  ProviderDescriptor descriptor() const override;
  /// Number of HTTP requests issued so far.
  std::size_t requests() const;

 private:
  RemoteEmbedConfig config_;
  mutable std::mutex mu_;
  std::string model_ = "unknown";
  std::size_t requests_ = 0;
};

/// Content-addressed LRU cache keyed by (provider descriptor, exact text).
class EmbeddingCache {
 public:
  explicit EmbeddingCache(std::size_t capacity = 100000) : capacity_(capacity) {}

  /// Returns vectors for `texts` in order. The provider is called at most
  /// once, with only the distinct texts that miss.
  std::vector<EmbeddingVector> embed(EmbeddingProvider& provider, const std::vector<std::string>& texts);

  std::size_t size() const;
  std::size_t hits() const;
  std::size_t misses() const;
  std::size_t capacity() const { return capacity_; }

 private:
  using Key = std::string;
  struct Entry {
    Key key;
    std::shared_ptr<const EmbeddingVector> value;
  };
  std::shared_ptr<const EmbeddingVector> lookup(const Key& key);
  void insert(const Key& key, std::shared_ptr<const EmbeddingVector> value);

  std::size_t capacity_;
  mutable std::mutex mu_;
  std::list<Entry> lru_;  // front = most recent
  std::unordered_map<Key, std::list<Entry>::iterator> index_;
  std::size_t hits_ = 0;
  std::size_t misses_ = 0;
};

std::vector<EmbeddingVector> embed_cached(EmbeddingProvider& provider, EmbeddingCache& cache,
                                          const std::vector<std::string>& texts);

}  // namespace semlink
