#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "semlink/corpus.hpp"
#include "semlink/html.hpp"

namespace semlink {

struct TitleAndHeaders {
  std::string title;
  std::vector<Header> headers;
};

/// Title of the first `title` element and every non-empty h1-h3 in document order.
TitleAndHeaders extract_title_headers(const html::Document& doc);

/// Text of the densest content block, with navigation-like subtrees removed.
/// Falls back to the whole body text when the densest block has fewer than
/// `kMinMainContentChars` characters.
std::string select_main_content(const html::Document& doc);

inline constexpr std::size_t kMinMainContentChars = 50;

/// Undirected co-occurrence graph over terms. Nodes keep first-insertion order.
class WordGraph {
 public:
  std::size_t add_node(const std::string& term);
  /// Adds `weight` to the edge between two distinct terms. Self-edges are ignored.
  void add_edge(const std::string& a, const std::string& b, double weight = 1.0);

  std::size_t size() const { return terms_.size(); }
  const std::string& term(std::size_t i) const { return terms_[i]; }
  const std::map<std::size_t, double>& neighbors(std::size_t i) const { return adjacency_[i]; }
  double edge_weight(std::size_t a, std::size_t b) const;

 private:
  std::vector<std::string> terms_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::map<std::size_t, double>> adjacency_;
};

/// Links every pair of distinct content tokens that occur within `window`
/// consecutive positions of each other.
WordGraph build_word_graph(const std::vector<std::string>& tokens, int window);

/// Stopword-free content tokens of `text`.
std::vector<std::string> content_tokens(std::string_view text);

struct RankOutcome {
  std::vector<double> scores;  // indexed like the graph's nodes
  int iterations = 0;
  bool converged = false;
};

/// Weighted PageRank with synchronous updates, starting from all ones:
///   s(v) = (1 - d) + d * sum_{u in adj(v)} w(u,v) / W(u) * s(u)
/// where W(u) is the total edge weight at u. Stops when the largest per-node
/// change drops below `tol` or after `max_iter` sweeps.
RankOutcome rank_word_graph(const WordGraph& graph, double damping, int max_iter, double tol);

struct TextRankParams {
  std::size_t top_n = 10;
  int window = 4;
  double damping = 0.85;
  int max_iter = 100;
  double tol = 1e-6;
};

/// Top-n terms by score, ties broken lexicographically. Empty text gives an
/// empty list. Throws std::invalid_argument on out-of-range parameters.
std::vector<Keyword> textrank_keywords(std::string_view text, const TextRankParams& params = {});

PageContent build_page_content(const html::Document& doc, std::string_view url, int http_status,
                               const TextRankParams& params = {});
PageContent build_page_content(std::string_view html, std::string_view url, int http_status,
                               const TextRankParams& params = {});

}  // namespace semlink
