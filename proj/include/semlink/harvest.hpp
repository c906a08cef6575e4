#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "semlink/corpus.hpp"
#include "semlink/dom_context.hpp"
#include "semlink/embedding.hpp"
#include "semlink/errors.hpp"

namespace semlink {

enum class SeedCategory { News, ECommerce, Education, Government, TechBlog, Other };

std::string_view to_string(SeedCategory c);
/// Case-insensitive; unknown names map to Other.
SeedCategory parse_category(std::string_view name);

struct SeedEntry {
  std::string url;
  SeedCategory category = SeedCategory::Other;
};

struct SeedList {
  std::vector<SeedEntry> entries;

  /// One `url[,category]` per line; blank lines and `#` comments skipped;
  /// duplicates dropped. Throws ParseFailure on a non-absolute http(s) URL,
  /// naming the line.
  static SeedList parse(std::string_view text);
  static SeedList load(const std::filesystem::path& path);
};

struct FetchPolicy {
  double timeout_s = 10.0;
  int max_retries = 2;
  double retry_backoff_s = 0.5;  // doubles per retry
  std::size_t max_links_per_seed = 500;
  int parallelism = 4;
  std::string user_agent = "semlink/1.0";
  bool respect_robots = true;
  double per_host_interval_s = 1.0;
  int max_redirects = 10;
  /// Pre-rendered pages, looked up by rendered_dump_name(url) before fetching.
  std::optional<std::filesystem::path> rendered_html_dir;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// File name under --rendered-html-dir for a URL: the URL without "://",
/// every byte outside [A-Za-z0-9.-] replaced by '_', plus ".html".
std::string rendered_dump_name(std::string_view url);

class TooManyRedirects : public TransportFailure {
 public:
  using TransportFailure::TransportFailure;
};

class RobotsDenied : public Error {
 public:
  using Error::Error;
};

struct FetchResult {
  int status = 0;
  std::string final_url;
  std::string body;  // UTF-8
  std::string content_type;
};

/// Allow/Disallow rules of the robots.txt group that applies to us.
class RobotsRules {
 public:
  static RobotsRules parse(std::string_view robots_txt, std::string_view user_agent);
  static RobotsRules allow_all() { return {}; }
  /// Longest matching rule wins; Allow wins ties; no match allows.
  bool allowed(std::string_view path) const;

 private:
  std::vector<std::pair<std::string, bool>> rules_;  // (prefix, allow)
};

/// At most one request in flight per host, and request starts on a host
/// spaced by at least `interval`.
class HostGate {
 public:
  explicit HostGate(double interval_s) : interval_(interval_s) {}
  void acquire(const std::string& host);
  void release(const std::string& host);

 private:
  struct Slot {
    bool busy = false;
    std::chrono::steady_clock::time_point next_start{};
  };
  double interval_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<std::string, Slot> slots_;
};

/// Thread-safe fetcher sharing the robots cache and host gate between
/// workers.
class Fetcher {
 public:
  explicit Fetcher(FetchPolicy policy);

  /// Follows up to max_redirects redirects and decodes the body to UTF-8
  /// (charset from Content-Type, else UTF-8, with a Latin-1 fallback for
  /// invalid UTF-8). Throws http::TimeoutError, TooManyRedirects,
  /// TransportFailure or RobotsDenied.
  FetchResult fetch(const std::string& url);
  /// Single GET returning undecoded bytes, for images.
  std::optional<std::vector<std::uint8_t>> fetch_bytes(const std::string& url);

  const FetchPolicy& policy() const { return policy_; }
  HostGate& gate() { return gate_; }
  std::size_t requests() const { return requests_.load(); }

 private:
  struct Raw {
    int status = 0;
    std::string body;
    std::string content_type;
    std::string location;
  };
  Raw get_with_retries(const std::string& url);
  bool robots_allow(const std::string& url);

  FetchPolicy policy_;
  HostGate gate_;
  std::mutex robots_mu_;
  std::unordered_map<std::string, std::shared_ptr<RobotsRules>> robots_;
  std::atomic<std::size_t> requests_{0};
};

FetchResult fetch(const std::string& url, const FetchPolicy& policy);

struct SeedOutcome {
  std::string seed_url;
  std::vector<CorpusPair> pairs;
  std::size_t attempted = 0;  // anchors discovered (after the per-seed cap)
  std::map<std::string, std::size_t> dropped;  // filter drops and rejects by reason
  std::map<int, std::size_t> status_histogram;  // per distinct target fetched
  std::size_t target_failures = 0;
  std::vector<std::string> warnings;
  std::optional<std::string> error;  // seed-level failure
};

struct HarvestOptions {
  int side_texts = kDefaultSideTexts;
  const OcrPlugin* ocr = nullptr;
  const std::atomic<bool>* cancel = nullptr;
  /// Called after each seed's pairs are durably written.
  std::function<void(const SeedOutcome&)> on_seed_written;
};

SeedOutcome harvest_seed(Fetcher& fetcher, const std::string& seed_url, const HarvestOptions& options = {});

struct HarvestStats {
  std::size_t seeds = 0;
  std::size_t seeds_failed = 0;
  std::size_t attempted = 0;
  std::size_t pairs = 0;
  std::map<std::string, std::size_t> pairs_per_seed;
  std::map<std::string, std::size_t> dropped;
  std::map<int, std::size_t> status_histogram;
  std::size_t target_failures = 0;
  std::vector<std::string> errors;
  bool cancelled = false;

  nlohmann::json to_json() const;
};

/// Seeds are processed by `parallelism` workers. After every completed seed
/// the whole corpus so far is rewritten atomically, so the file at
/// `out_path` is always a parseable corpus.
HarvestStats harvest_all(const SeedList& seeds, const FetchPolicy& policy,
                         const std::filesystem::path& out_path, const HarvestOptions& options = {});

struct AuditReport {
  static constexpr int kBuckets = 20;  // width 0.1 over [-1, 1]
  std::vector<std::size_t> histogram = std::vector<std::size_t>(kBuckets, 0);
  std::size_t evaluated = 0;
  std::size_t skipped_empty_anchor = 0;
  std::size_t skipped_empty_title = 0;
  double fraction_above_05 = 0.0;
  double fraction_above_09 = 0.0;
  std::vector<double> similarities;  // per evaluated pair, input order

  static int bucket_of(double cosine);
  nlohmann::json to_json() const;
};

AuditReport base_similarity_audit(const std::vector<CorpusPair>& pairs, EmbeddingProvider& provider,
                                  EmbeddingCache* cache = nullptr);

}  // namespace semlink
