#include "semlink/dom_context.hpp"

#include <algorithm>
#include <unordered_set>

#include "semlink/text.hpp"
#include "semlink/url.hpp"

namespace semlink {

namespace {

std::optional<std::string> non_blank(const std::string* attr) {
  if (!attr) return std::nullopt;
  std::string v = text::normalize_whitespace(*attr);
  if (v.empty()) return std::nullopt;
  return v;
}

std::string snippet_of(const html::Document& doc, html::NodeId id) {
  const auto& n = doc.node(id);
  if (n.kind == html::NodeKind::Element && html::is_hidden_content(n.tag)) return {};
  const std::string t = n.kind == html::NodeKind::Text ? text::normalize_whitespace(n.text)
                                                       : html::text_content(doc, id);
  return text::truncate_at_word(t, kSnippetMaxChars);
}

}  // namespace

std::vector<AnchorCandidate> discover_anchors(const html::Document& doc, std::string_view base_url) {
  std::string base(base_url);
  for (html::NodeId b : doc.elements_by_tag("base")) {
    if (const auto* href = doc.node(b).attribute("href")) {
      if (auto resolved = resolve_url(base_url, *href)) base = *resolved;
      break;
    }
  }

  std::vector<AnchorCandidate> out;
  for (html::NodeId id : doc.elements_by_tag("a")) {
    const auto& node = doc.node(id);
    const std::string* href = node.attribute("href");
    if (!href) continue;
    AnchorCandidate c;
    c.href = *href;
    c.resolved_url = resolve_url(base, *href);
    c.node_path = doc.path_of(id);
    c.inner_text = html::text_content(doc, id);
    doc.walk(id, [&](html::NodeId n) {
      const auto& child = doc.node(n);
      if (child.is_element("img")) {
        AnchorImage img;
        img.alt = non_blank(child.attribute("alt"));
        img.title = non_blank(child.attribute("title"));
        if (const auto* src = child.attribute("src")) {
          img.src = resolve_url(base, *src);
          if (!img.src) img.src = *src;
        }
        c.images.push_back(std::move(img));
      }
      return true;
    });
    out.push_back(std::move(c));
  }
  return out;
}

std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::JavascriptScheme: return "JavascriptScheme";
    case DropReason::MailScheme: return "MailScheme";
    case DropReason::TelScheme: return "TelScheme";
    case DropReason::FragmentJump: return "FragmentJump";
    case DropReason::Unresolvable: return "Unresolvable";
  }
  return "Unresolvable";
}

std::optional<DropReason> filter_navigational(const AnchorCandidate& c) {
  std::string_view href = c.href;
  while (!href.empty() && (href.front() == ' ' || href.front() == '\t' || href.front() == '\n' ||
                           href.front() == '\r')) {
    href.remove_prefix(1);
  }
  if (href.starts_with('#')) return DropReason::FragmentJump;
  const std::string scheme = href_scheme(href);
  if (scheme == "javascript") return DropReason::JavascriptScheme;
  if (scheme == "mailto") return DropReason::MailScheme;
  if (scheme == "tel") return DropReason::TelScheme;
  if (!c.resolved_url) return DropReason::Unresolvable;
  return std::nullopt;
}

std::vector<SideText> extract_side_text(const html::Document& doc, const AnchorCandidate& anchor,
                                        int k) {
  std::vector<SideText> out;
  const auto anchor_id = doc.node_at(anchor.node_path);
  if (!anchor_id || k < 1) return out;
  const std::string own = text::normalize_whitespace(anchor.inner_text);
  std::unordered_set<std::string> seen;

  auto take = [&](html::NodeId id) {
    std::string s = snippet_of(doc, id);
    if (s.empty() || s == own || seen.contains(s)) return;
    seen.insert(s);
    out.push_back({std::move(s), static_cast<int>(out.size()) + 1});
  };

  html::NodeId child = *anchor_id;
  while (child != doc.root() && static_cast<int>(out.size()) < k) {
    const html::NodeId parent = doc.node(child).parent;
    const auto& siblings = doc.node(parent).children;
    const auto pos = static_cast<std::size_t>(
        std::find(siblings.begin(), siblings.end(), child) - siblings.begin());

    // Non-empty siblings on each side, nearest first.
    std::vector<html::NodeId> before, after;
    for (std::size_t i = pos; i-- > 0;) {
      if (!snippet_of(doc, siblings[i]).empty()) before.push_back(siblings[i]);
    }
    for (std::size_t i = pos + 1; i < siblings.size(); ++i) {
      if (!snippet_of(doc, siblings[i]).empty()) after.push_back(siblings[i]);
    }
    for (std::size_t i = 0; i < std::max(before.size(), after.size()); ++i) {
      if (i < before.size() && static_cast<int>(out.size()) < k) take(before[i]);
      if (i < after.size() && static_cast<int>(out.size()) < k) take(after[i]);
    }
    child = parent;
  }
  return out;
}

ImageTextResult extract_image_text(const AnchorCandidate& anchor, const OcrPlugin* ocr,
                                   const ImageFetcher& fetch) {
  ImageTextResult result;
  for (const auto& img : anchor.images) {
    if (img.alt) result.texts.push_back({ImageTextKind::Alt, *img.alt});
    if (img.title) result.texts.push_back({ImageTextKind::Title, *img.title});
  }
  if (!ocr || !*ocr) return result;
  for (const auto& img : anchor.images) {
    if (!img.src) continue;
    std::optional<std::vector<std::uint8_t>> bytes;
    if (fetch) bytes = fetch(*img.src);
    if (!bytes) {
      result.warnings.push_back("image fetch failed: " + *img.src);
      continue;
    }
    for (const auto& fragment : (*ocr)(*bytes)) {
      std::string t = text::normalize_whitespace(fragment);
      if (!t.empty()) result.texts.push_back({ImageTextKind::Ocr, std::move(t)});
    }
  }
  return result;
}

HyperlinkContext build_hyperlink_context(const html::Document& doc, const AnchorCandidate& anchor,
                                         std::string_view source_url, int k, const OcrPlugin* ocr,
                                         const ImageFetcher& fetch,
                                         std::vector<std::string>* warnings) {
  HyperlinkContext ctx;
  ctx.source_url = std::string(source_url);
  ctx.anchor_text = text::normalize_whitespace(anchor.inner_text);
  ctx.link_kind = anchor.images.empty() ? LinkKind::Text : LinkKind::Image;
  if (ctx.link_kind == LinkKind::Image) {
    auto images = extract_image_text(anchor, ocr, fetch);
    ctx.image_texts = std::move(images.texts);
    if (warnings) warnings->insert(warnings->end(), images.warnings.begin(), images.warnings.end());
  }
  ctx.side_texts = extract_side_text(doc, anchor, k);
  return ctx;
}

}  // namespace semlink
