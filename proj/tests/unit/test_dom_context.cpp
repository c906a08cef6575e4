#include <doctest.h>

#include "semlink/dom_context.hpp"

using namespace semlink;

namespace {

AnchorCandidate only_anchor(const html::Document& doc, std::string_view base = "https://s.example/dir/page.html") {
  auto anchors = discover_anchors(doc, base);
  REQUIRE(anchors.size() == 1);
  return anchors[0];
}

}  // namespace

TEST_CASE("discovery resolves hrefs and honours base") {
  const auto doc = html::parse_html(
      "<a href='next.html'>Next</a><a name=x>no href</a><a href='//cdn.example/x'>cdn</a>"
      "<a href='http://[bad'>bad</a>");
  const auto anchors = discover_anchors(doc, "https://s.example/dir/page.html");
  REQUIRE(anchors.size() == 3);
  CHECK(*anchors[0].resolved_url == "https://s.example/dir/next.html");
  CHECK(anchors[0].inner_text == "Next");
  CHECK(*anchors[1].resolved_url == "https://cdn.example/x");

  const auto based = html::parse_html("<base href='https://other.example/root/'><a href='a.html'>A</a>");
  CHECK(*only_anchor(based).resolved_url == "https://other.example/root/a.html");
}

TEST_CASE("navigational filter") {
  const auto doc = html::parse_html(
      "<a href='javascript:void(0)'>j</a><a href='MAILTO:x@y'>m</a><a href='tel:+1'>t</a>"
      "<a href='#top'>f</a><a href=' #x'>f2</a><a href='/ok'>ok</a>");
  const auto anchors = discover_anchors(doc, "https://s.example/");
  REQUIRE(anchors.size() == 6);
  CHECK(*filter_navigational(anchors[0]) == DropReason::JavascriptScheme);
  CHECK(*filter_navigational(anchors[1]) == DropReason::MailScheme);
  CHECK(*filter_navigational(anchors[2]) == DropReason::TelScheme);
  CHECK(*filter_navigational(anchors[3]) == DropReason::FragmentJump);
  CHECK(*filter_navigational(anchors[4]) == DropReason::FragmentJump);
  CHECK_FALSE(filter_navigational(anchors[5]));
  AnchorCandidate broken;
  broken.href = "::";
  CHECK(*filter_navigational(broken) == DropReason::Unresolvable);
  CHECK(to_string(DropReason::MailScheme) == "MailScheme");
}

TEST_CASE("side text order: nearest first, alternating, then upward") {
  const auto doc = html::parse_html(
      "<div><p>far before</p><section><span>b2</span><span>b1</span><a href=x>Anchor</a>"
      "<span>a1</span><span>a2</span><span>a3</span></section><p>far after</p></div>");
  const auto side = extract_side_text(doc, only_anchor(doc), 5);
  REQUIRE(side.size() == 5);
  CHECK(side[0].text == "b1");
  CHECK(side[1].text == "a1");
  CHECK(side[2].text == "b2");
  CHECK(side[3].text == "a2");
  CHECK(side[4].text == "a3");
  for (int i = 0; i < 5; ++i) CHECK(side[static_cast<std::size_t>(i)].dom_distance == i + 1);

  const auto more = extract_side_text(doc, only_anchor(doc), 7);
  REQUIRE(more.size() == 7);
  CHECK(more[5].text == "far before");
  CHECK(more[6].text == "far after");
  CHECK(extract_side_text(doc, only_anchor(doc), 0).empty());
}

TEST_CASE("side text skips duplicates, anchor text and hidden content") {
  const auto doc = html::parse_html(
      "<div><script>var a;</script><span>same</span><a href=x>Anchor</a><span>same</span>"
      "<span>Anchor</span></div><p>outer</p>");
  const auto side = extract_side_text(doc, only_anchor(doc), 5);
  REQUIRE(side.size() == 2);
  CHECK(side[0].text == "same");
  CHECK(side[1].text == "outer");
}

TEST_CASE("long snippets are cut at a word boundary") {
  std::string words;
  for (int i = 0; i < 80; ++i) words += "lecture ";
  const auto doc = html::parse_html("<div><p>" + words + "</p><a href=x>A</a></div>");
  const auto side = extract_side_text(doc, only_anchor(doc), 1);
  REQUIRE(side.size() == 1);
  CHECK(side[0].text.size() <= kSnippetMaxChars);
  CHECK(side[0].text.back() == 'e');
}

TEST_CASE("image text: attributes first, OCR only with a plugin") {
  const auto doc = html::parse_html(
      "<a href=x><img src='logo.png' alt=' Campus  Map ' title='Map of campus'><img src='b.png'></a>");
  const auto anchor = only_anchor(doc);
  REQUIRE(anchor.images.size() == 2);
  CHECK(*anchor.images[0].src == "https://s.example/dir/logo.png");

  int fetches = 0;
  const ImageFetcher fetch = [&](const std::string& url) -> std::optional<std::vector<std::uint8_t>> {
    ++fetches;
    if (url.ends_with("b.png")) return std::nullopt;
    return std::vector<std::uint8_t>{1, 2, 3};
  };
  const auto plain = extract_image_text(anchor, nullptr, fetch);
  CHECK(fetches == 0);
  REQUIRE(plain.texts.size() == 2);
  CHECK(plain.texts[0].kind == ImageTextKind::Alt);
  CHECK(plain.texts[0].text == "Campus Map");
  CHECK(plain.texts[1].kind == ImageTextKind::Title);

  const OcrPlugin ocr = [](std::span<const std::uint8_t> bytes) {
    return std::vector<std::string>{"Welcome " + std::to_string(bytes.size()), "  "};
  };
  const auto with_ocr = extract_image_text(anchor, &ocr, fetch);
  CHECK(fetches == 2);
  REQUIRE(with_ocr.texts.size() == 3);
  CHECK(with_ocr.texts[2].kind == ImageTextKind::Ocr);
  CHECK(with_ocr.texts[2].text == "Welcome 3");
  CHECK(with_ocr.warnings.size() == 1);
}

TEST_CASE("hyperlink context assembly") {
  const auto doc = html::parse_html("<li><a href=x><img alt='Icon'> Read  More </a> <em>about algebra</em></li>");
  const auto ctx = build_hyperlink_context(doc, only_anchor(doc), "https://s.example/");
  CHECK(ctx.source_url == "https://s.example/");
  CHECK(ctx.anchor_text == "Read More");
  CHECK(ctx.link_kind == LinkKind::Image);
  REQUIRE(ctx.image_texts.size() == 1);
  REQUIRE(ctx.side_texts.size() == 1);
  CHECK(ctx.side_texts[0].text == "about algebra");
}
