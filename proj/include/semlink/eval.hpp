#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "semlink/corpus.hpp"
#include "semlink/embedding.hpp"
#include "semlink/model.hpp"
#include "semlink/oracle.hpp"

namespace semlink {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// nullopt marks an undefined ratio (zero denominator).
struct Metrics {
  std::optional<double> accuracy;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

Metrics compute_metrics(const ConfusionCounts& counts);

nlohmann::json to_json(const ConfusionCounts& c);
nlohmann::json to_json(const Metrics& m);

struct AblationConfig {
  bool use_anchor = true;
  bool use_side_text = true;
  bool use_image_text = true;

  /// Throws std::invalid_argument when every flag is off.
  void validate() const;
  SourceMask mask() const { return {use_anchor, use_side_text, use_image_text}; }
  static AblationConfig anchor_only() { return {true, false, false}; }
};

struct EvalReport {
  ConfusionCounts counts;
  Metrics metrics;
  BatchOutcome outcome;  // per-pair verdicts in input order
  /// Pairs with no source text left after masking; counted as Irrelevant.
  std::size_t featureless = 0;
};

/// Every pair must be labeled Positive or Negative (std::invalid_argument
/// otherwise). Valid on a Positive pair is a true positive.
EvalReport evaluate(const SiameseModel& model, EmbeddingProvider& provider, EmbeddingCache& cache,
                    const std::vector<CorpusPair>& pairs, double threshold,
                    const AblationConfig& ablation);

/// Verdict lines extended with each pair's label.
void write_eval_verdicts(std::ostream& out, const std::vector<CorpusPair>& pairs,
                         const EvalReport& report);

/// Canonical `name: value` renderings. Empty list fields are omitted.
std::string render_link_info(const HyperlinkContext& link);
std::string render_webpage_info(const PageContent& page);
std::string render_prompt(std::string_view link_info, std::string_view webpage_info);

struct LikertRating {
  int value = 0;  // 1..5
  std::string raw_reply;
};

/// The first integer after "Rating criteria:" (case-insensitive), allowing
/// only whitespace and punctuation in between. Throws ParseFailure, whose
/// message carries the raw reply.
LikertRating parse_rating(std::string_view reply);

struct LlmConfig {
  std::string endpoint;  // full chat-completion URL
  std::string model;
  std::string api_key;
  double timeout_s = 60.0;
  int max_attempts = 3;
  double retry_backoff_s = 1.0;
  int rating_threshold = 4;
  int concurrency = 1;

  /// SEMLINK_LLM_ENDPOINT, SEMLINK_LLM_MODEL, SEMLINK_LLM_KEY.
  static LlmConfig from_env();
  void validate() const;
};

/// Sends one prompt and returns the reply content. Transport failures are
/// retried with doubling backoff.
std::string chat_completion(const LlmConfig& config, const std::string& prompt);

enum class BaselineStatus { Rated, ParseFailure, Gap };

struct BaselinePairResult {
  BaselineStatus status = BaselineStatus::Gap;
  std::optional<int> rating;
  std::string raw_reply;
  std::string error;
  double latency_s = 0.0;
};

struct LatencyStats {
  std::size_t requests = 0;
  double wall_seconds = 0.0;
  double mean_latency_s = 0.0;
  std::optional<double> pairs_per_second;
};

struct BaselineReport {
  ConfusionCounts counts;  // rated pairs only
  Metrics metrics;
  LatencyStats latency;
  std::size_t parse_failures = 0;
  std::size_t gaps = 0;
  std::vector<BaselinePairResult> pairs;
};

BaselineReport llm_baseline_evaluate(const LlmConfig& config, const std::vector<CorpusPair>& pairs);

nlohmann::json to_json(const LatencyStats& s);

}  // namespace semlink
