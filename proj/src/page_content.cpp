#include "semlink/page_content.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

#include "semlink/text.hpp"

namespace semlink {

namespace {

const std::unordered_set<std::string_view> kNoiseTags = {"nav", "footer", "header"};
const std::unordered_set<std::string_view> kCandidateBlocks = {"body",    "main", "article",
                                                               "section", "div",  "td"};
// Structural containers; each one inside a block dilutes its density.
const std::unordered_set<std::string_view> kContainers = {
    "div", "section", "article", "main", "ul", "ol", "table", "form", "dl", "aside"};

bool contains_noise_marker(const std::string* attr) {
  if (!attr) return false;
  const std::string v = text::fold_case(*attr);
  for (std::string_view marker : {"nav", "menu", "footer", "sidebar"}) {
    if (v.find(marker) != std::string::npos) return true;
  }
  return false;
}

bool is_noise(const html::Node& n) {
  if (n.kind != html::NodeKind::Element) return false;
  if (kNoiseTags.contains(n.tag)) return true;
  return contains_noise_marker(n.attribute("id")) || contains_noise_marker(n.attribute("class"));
}

}  // namespace

TitleAndHeaders extract_title_headers(const html::Document& doc) {
  TitleAndHeaders out;
  const auto titles = doc.elements_by_tag("title");
  if (!titles.empty()) out.title = html::text_content(doc, titles.front());
  doc.walk(doc.root(), [&](html::NodeId id) {
    const auto& n = doc.node(id);
    if (n.kind == html::NodeKind::Element && n.tag.size() == 2 && n.tag[0] == 'h' &&
        n.tag[1] >= '1' && n.tag[1] <= '3') {
      std::string t = html::text_content(doc, id);
      if (!t.empty()) out.headers.push_back({n.tag[1] - '0', std::move(t)});
      return false;
    }
    return true;
  });
  return out;
}

std::string select_main_content(const html::Document& doc) {
  const std::size_t n = doc.size();
  std::vector<char> noisy(n, 0);
  // Parents always precede children in the arena, so one forward pass
  // propagates the noise flag and one backward pass aggregates subtrees.
  for (html::NodeId id = 1; id < n; ++id) {
    const auto& node = doc.node(id);
    const bool hidden = node.kind == html::NodeKind::Element && html::is_hidden_content(node.tag);
    noisy[id] = noisy[node.parent] || is_noise(node) || hidden;
  }
  std::vector<double> text_len(n, 0.0), link_len(n, 0.0), containers(n, 0.0);
  std::vector<char> in_link(n, 0);
  for (html::NodeId id = 1; id < n; ++id) {
    in_link[id] = in_link[doc.node(id).parent] || doc.node(id).is_element("a");
  }
  for (html::NodeId id = n; id-- > 1;) {
    if (noisy[id]) continue;
    const auto& node = doc.node(id);
    if (node.kind == html::NodeKind::Text) {
      const double len =
          static_cast<double>(text::codepoint_length(text::normalize_whitespace(node.text)));
      text_len[id] = len;
      if (in_link[id]) link_len[id] = len;
    }
    const html::NodeId parent = node.parent;
    text_len[parent] += text_len[id];
    link_len[parent] += link_len[id];
    containers[parent] += containers[id] + (kContainers.contains(node.tag) ? 1.0 : 0.0);
  }

  std::optional<html::NodeId> best;
  double best_density = -1.0;
  doc.walk(doc.root(), [&](html::NodeId id) {
    if (noisy[id]) return false;
    const auto& node = doc.node(id);
    if (node.kind == html::NodeKind::Element && kCandidateBlocks.contains(node.tag)) {
      const double density = (text_len[id] - link_len[id]) / (1.0 + containers[id]);
      if (text_len[id] > 0 && density > best_density) {
        best_density = density;
        best = id;
      }
    }
    return true;
  });

  std::string main_text;
  if (best) {
    main_text = html::text_content_filtered(doc, *best, [&](html::NodeId id) { return noisy[id] != 0; });
  }
  if (text::codepoint_length(main_text) >= kMinMainContentChars) return main_text;
  const auto bodies = doc.elements_by_tag("body");
  return html::text_content(doc, bodies.empty() ? doc.root() : bodies.front());
}

std::size_t WordGraph::add_node(const std::string& term) {
  const auto [it, inserted] = index_.try_emplace(term, terms_.size());
  if (inserted) {
    terms_.push_back(term);
    adjacency_.emplace_back();
  }
  return it->second;
}

void WordGraph::add_edge(const std::string& a, const std::string& b, double weight) {
  const std::size_t ia = add_node(a);
  const std::size_t ib = add_node(b);
  if (ia == ib) return;
  adjacency_[ia][ib] += weight;
  adjacency_[ib][ia] += weight;
}

double WordGraph::edge_weight(std::size_t a, std::size_t b) const {
  const auto it = adjacency_[a].find(b);
  return it == adjacency_[a].end() ? 0.0 : it->second;
}

std::vector<std::string> content_tokens(std::string_view s) {
  std::vector<std::string> out;
  for (auto& tok : text::tokenize(s)) {
    if (text::is_stopword(tok)) continue;
    if (tok.size() == 1 && static_cast<unsigned char>(tok[0]) < 0x80) continue;
    out.push_back(std::move(tok));
  }
  return out;
}

WordGraph build_word_graph(const std::vector<std::string>& tokens, int window) {
  WordGraph g;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    g.add_node(tokens[i]);
    for (std::size_t j = i + 1; j < tokens.size() && j < i + static_cast<std::size_t>(window); ++j) {
      g.add_edge(tokens[i], tokens[j]);
    }
  }
  return g;
}

RankOutcome rank_word_graph(const WordGraph& graph, double damping, int max_iter, double tol) {
  const std::size_t n = graph.size();
  RankOutcome out;
  out.scores.assign(n, 1.0);
  std::vector<double> out_weight(n, 0.0);
  for (std::size_t u = 0; u < n; ++u) {
    for (const auto& [v, w] : graph.neighbors(u)) out_weight[u] += w;
  }
  std::vector<double> next(n);
  for (int iter = 0; iter < max_iter; ++iter) {
    double max_delta = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      double sum = 0.0;
      for (const auto& [u, w] : graph.neighbors(v)) sum += w / out_weight[u] * out.scores[u];
      next[v] = (1.0 - damping) + damping * sum;
      max_delta = std::max(max_delta, std::abs(next[v] - out.scores[v]));
    }
    out.scores.swap(next);
    out.iterations = iter + 1;
    if (max_delta < tol) {
      out.converged = true;
      break;
    }
  }
  return out;
}

std::vector<Keyword> textrank_keywords(std::string_view s, const TextRankParams& params) {
  if (params.top_n < 1) throw std::invalid_argument("top_n must be at least 1");
  if (params.window < 2) throw std::invalid_argument("window must be at least 2");
  if (!(params.damping > 0.0 && params.damping < 1.0)) {
    throw std::invalid_argument("damping must be in (0, 1)");
  }
  const WordGraph graph = build_word_graph(content_tokens(s), params.window);
  if (graph.size() == 0) return {};
  const RankOutcome ranked = rank_word_graph(graph, params.damping, params.max_iter, params.tol);
  std::vector<Keyword> all;
  all.reserve(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) all.push_back({graph.term(i), ranked.scores[i]});
  std::sort(all.begin(), all.end(), [](const Keyword& a, const Keyword& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.term < b.term;
  });
  if (all.size() > params.top_n) all.resize(params.top_n);
  return all;
}

PageContent build_page_content(const html::Document& doc, std::string_view url, int http_status,
                               const TextRankParams& params) {
  PageContent page;
  page.target_url = std::string(url);
  page.http_status = http_status;
  auto th = extract_title_headers(doc);
  page.title = std::move(th.title);
  page.headers = std::move(th.headers);
  page.keywords = textrank_keywords(select_main_content(doc), params);
  return page;
}

PageContent build_page_content(std::string_view html_text, std::string_view url, int http_status,
                               const TextRankParams& params) {
  return build_page_content(html::parse_html(html_text), url, http_status, params);
}

}  // namespace semlink
