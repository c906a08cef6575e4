#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "semlink/corpus.hpp"
#include "semlink/embedding.hpp"
#include "semlink/model.hpp"

namespace semlink {

enum class FeatureSource { Anchor, ImageOcr, ImageAttr, SideText, PageTitle, PageHeader, PageKeywords };

std::string_view to_string(FeatureSource s);

struct FeatureText {
  std::string text;
  FeatureSource source = FeatureSource::Anchor;
  int side_rank = 0;  // k for SideText, 0 otherwise

  bool operator==(const FeatureText&) const = default;
};

/// Source features carry position weights; target features carry none (0).
double weight_of(FeatureSource source, int side_rank = 0);
double weight_of(const FeatureText& feature);

inline constexpr double kDefaultThreshold = 0.7;
inline constexpr std::size_t kMaxHeaderFeatures = 10;

/// Which source feature families enter the pair matrix.
struct SourceMask {
  bool anchor = true;
  bool side_text = true;
  bool image_text = true;
};

/// Anchor, image texts, then side texts, skipping masked families and empty
/// texts.
std::vector<FeatureText> source_features(const HyperlinkContext& link, const SourceMask& mask = {});
/// Title, the first 10 headers, then the keywords joined by spaces.
std::vector<FeatureText> target_features(const PageContent& page);

enum class Decision { Valid, Irrelevant };
std::string_view to_string(Decision d);

struct MatrixEntry {
  std::size_t source = 0;  // index into Verdict::sources
  std::size_t target = 0;  // index into Verdict::targets
  double raw = 0.0;
  double weight = 0.0;
  double weighted = 0.0;
};

struct Verdict {
  double score = 0.0;
  Decision decision = Decision::Irrelevant;
  double threshold = kDefaultThreshold;
  std::vector<FeatureText> sources;
  std::vector<FeatureText> targets;
  std::vector<MatrixEntry> matrix;  // sources outer, targets inner
  std::size_t best = 0;             // index into matrix of the first maximum
};

/// Builds the verdict from precomputed raw scores laid out sources-outer.
Verdict aggregate(std::vector<FeatureText> sources, std::vector<FeatureText> targets,
                  std::span<const double> raw_scores, double threshold);

/// Throws NoSourceFeatures / NoTargetFeatures.
Verdict score_pair(const SiameseModel& model, EmbeddingProvider& provider, EmbeddingCache& cache,
                   const HyperlinkContext& link, const PageContent& page,
                   double threshold = kDefaultThreshold, const SourceMask& mask = {});

struct VerifyInput {
  const HyperlinkContext* link = nullptr;
  const PageContent* page = nullptr;
};

struct VerifyResult {
  std::optional<Verdict> verdict;
  std::string error_kind;  // empty when verdict is set
  std::string error_detail;
};

struct ThroughputReport {
  std::size_t pairs = 0;
  double embed_seconds = 0.0;
  double head_seconds = 0.0;
  /// Absent for an empty batch.
  std::optional<double> pairs_per_second;
};

struct BatchOutcome {
  std::vector<VerifyResult> results;  // input order
  ThroughputReport report;
};

struct BatchOptions {
  double threshold = kDefaultThreshold;
  SourceMask mask;
  std::size_t chunk_pairs = 1024;
  bool parallel = true;
};

/// Scores every pair; per-pair failures are recorded inline. Embeddings of
/// distinct texts are fetched through the cache once per chunk, projected
/// once, and then every matrix cell runs only the head.
BatchOutcome batch_verify(const SiameseModel& model, EmbeddingProvider& provider,
                          EmbeddingCache& cache, std::span<const VerifyInput> pairs,
                          const BatchOptions& options = {});
BatchOutcome batch_verify(const SiameseModel& model, EmbeddingProvider& provider,
                          EmbeddingCache& cache, std::span<const CorpusPair> pairs,
                          const BatchOptions& options = {});

nlohmann::json to_json(const FeatureText& f);
nlohmann::json to_json(const Verdict& v);
nlohmann::json verdict_line(std::size_t index, const VerifyInput& pair, const VerifyResult& result);
/// One verdict_line per line. Each line carries the input index, the pair's
/// URLs, and either the verdict or the inline error.
void write_verdicts(std::ostream& out, std::span<const VerifyInput> pairs,
                    std::span<const VerifyResult> results);
nlohmann::json to_json(const ThroughputReport& r);

}  // namespace semlink
