#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace semlink {

enum class ImageTextKind { Alt, Title, Ocr };
enum class LinkKind { Text, Image };
enum class Label { Positive, Negative, Unlabeled };

struct ImageText {
  ImageTextKind kind = ImageTextKind::Alt;
  std::string text;
  bool operator==(const ImageText&) const = default;
};

struct SideText {
  std::string text;
  int dom_distance = 1;
  bool operator==(const SideText&) const = default;
};

/// Everything known about a hyperlink on its source page.
struct HyperlinkContext {
  std::string source_url;  // page the link appears on
  std::string anchor_text;
  std::vector<ImageText> image_texts;
  std::vector<SideText> side_texts;  // at most 5, ascending dom_distance
  LinkKind link_kind = LinkKind::Text;
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, preserved

  bool operator==(const HyperlinkContext&) const = default;
};

struct Header {
  int level = 1;  // 1..3
  std::string text;
  bool operator==(const Header&) const = default;
};

struct Keyword {
  std::string term;
  double score = 0.0;
  bool operator==(const Keyword&) const = default;
};

/// What the target page says about itself.
struct PageContent {
  std::string target_url;
  std::optional<std::string> final_url;  // post-redirect URL when it differs
  int http_status = 0;
  std::string title;
  std::vector<Header> headers;
  std::vector<Keyword> keywords;  // descending score
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const PageContent&) const = default;
};

struct CorpusPair {
  HyperlinkContext link;
  PageContent page;
  Label label = Label::Unlabeled;
  std::string collected_at;  // RFC 3339 UTC
  nlohmann::json extra = nlohmann::json::object();

  bool operator==(const CorpusPair&) const = default;
};

struct CorpusSplit {
  std::vector<CorpusPair> train;
  std::vector<CorpusPair> validation;
  std::uint64_t seed = 0;
  /// Set when the split is degenerate (validation or train came out empty).
  std::optional<std::string> warning;
};

enum class RejectReason { EmptySource, EmptyTarget };

struct CleanResult {
  bool accepted = true;
  std::optional<RejectReason> reason;

  static CleanResult accept() { return {}; }
  static CleanResult reject(RejectReason r) { return {false, r}; }
};

/// Rejects pairs whose source side has neither anchor nor image text, or
/// whose target side has no title, headers, or keywords.
CleanResult clean_pair(const CorpusPair& pair);

std::string_view to_string(RejectReason r);
std::string_view to_string(Label l);
std::string_view to_string(LinkKind k);
std::string_view to_string(ImageTextKind k);

/// Seeded Fisher-Yates shuffle, then a prefix/suffix cut at round(ratio * N).
/// Throws EmptyCorpus for an empty input and std::invalid_argument when ratio
/// is outside (0, 1).
CorpusSplit split_corpus(std::vector<CorpusPair> pairs, double ratio, std::uint64_t seed);

inline constexpr std::string_view kCorpusSchema = "hwpps-v1";

/// Document-level envelope. Unknown top-level keys survive a round trip.
struct CorpusFile {
  std::vector<CorpusPair> pairs;
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const CorpusPair& pair);
/// `field_prefix` and `line` are used for error reporting only.
CorpusPair pair_from_json(const nlohmann::json& j, const std::string& field_prefix,
                          std::size_t line);

std::string serialize_corpus(const CorpusFile& file);
CorpusFile parse_corpus(std::string_view document);

/// Throws IoFailure when the file cannot be read and SchemaViolation when it
/// does not match the corpus schema.
CorpusFile read_corpus_file(const std::filesystem::path& path);
std::vector<CorpusPair> read_corpus(const std::filesystem::path& path);

/// Writes atomically: a temporary sibling file is renamed over `path`.
void write_corpus(const CorpusFile& file, const std::filesystem::path& path);
void write_corpus(const std::vector<CorpusPair>& pairs, const std::filesystem::path& path);

/// Current time as RFC 3339 UTC with second precision.
std::string utc_timestamp_now();

}  // namespace semlink
