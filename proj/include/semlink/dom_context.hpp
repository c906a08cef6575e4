#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "semlink/corpus.hpp"
#include "semlink/html.hpp"

namespace semlink {

struct AnchorImage {
  std::optional<std::string> alt;
  std::optional<std::string> title;
  std::optional<std::string> src;  // resolved against the base URL when possible
};

/// An `a` element with an href, before any filtering.
struct AnchorCandidate {
  std::string href;
  std::optional<std::string> resolved_url;  // nullopt: unresolvable
  std::vector<std::size_t> node_path;
  std::string inner_text;
  std::vector<AnchorImage> images;
};

/// One candidate per `a` element carrying an href, in document order. A
/// `<base href>` in the document takes precedence over `base_url`.
std::vector<AnchorCandidate> discover_anchors(const html::Document& doc, std::string_view base_url);

enum class DropReason { JavascriptScheme, MailScheme, TelScheme, FragmentJump, Unresolvable };

std::string_view to_string(DropReason r);

/// nullopt means keep.
std::optional<DropReason> filter_navigational(const AnchorCandidate& candidate);

inline constexpr int kDefaultSideTexts = 5;
inline constexpr std::size_t kSnippetMaxChars = 200;

/// Up to `k` distinct text snippets around the anchor. Each tree level
/// contributes its sibling texts nearest-first, alternating preceding and
/// following; levels are visited from the anchor's parent upwards. The
/// dom_distance of a snippet is its 1-based rank in that order.
std::vector<SideText> extract_side_text(const html::Document& doc, const AnchorCandidate& anchor,
                                        int k = kDefaultSideTexts);

/// Text recognizer for image bytes. Must return the same fragments for the
/// same bytes.
using OcrPlugin = std::function<std::vector<std::string>(std::span<const std::uint8_t>)>;

/// Returns the raw bytes at a URL, or nullopt on failure.
using ImageFetcher = std::function<std::optional<std::vector<std::uint8_t>>(const std::string&)>;

struct ImageTextResult {
  std::vector<ImageText> texts;
  std::vector<std::string> warnings;
};

/// Attribute texts (alt, then title, per image) followed by OCR fragments.
/// Without a plugin the fetcher is never called.
ImageTextResult extract_image_text(const AnchorCandidate& anchor, const OcrPlugin* ocr,
                                   const ImageFetcher& fetch);

HyperlinkContext build_hyperlink_context(const html::Document& doc, const AnchorCandidate& anchor,
                                         std::string_view source_url, int k = kDefaultSideTexts,
                                         const OcrPlugin* ocr = nullptr,
                                         const ImageFetcher& fetch = {},
                                         std::vector<std::string>* warnings = nullptr);

}  // namespace semlink
