#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace semlink::html {

using NodeId = std::size_t;

enum class NodeKind { Document, Element, Text };

struct Node {
  NodeKind kind = NodeKind::Element;
  std::string tag;  // lower-case; empty for text and document nodes
  std::vector<std::pair<std::string, std::string>> attributes;
  std::string text;  // decoded character data for text nodes
  NodeId parent = 0;
  std::vector<NodeId> children;

  bool is_element(std::string_view name) const {
    return kind == NodeKind::Element && tag == name;
  }
  /// First attribute with this (lower-case) name.
  const std::string* attribute(std::string_view name) const;
};

/// An arena-allocated DOM. Node 0 is the document root.
class Document {
 public:
  Document();

  NodeId root() const { return 0; }
  const Node& node(NodeId id) const { return nodes_[id]; }
  std::size_t size() const { return nodes_.size(); }

  /// Child indices from the root down to `id`.
  std::vector<std::size_t> path_of(NodeId id) const;
  std::optional<NodeId> node_at(const std::vector<std::size_t>& path) const;

  /// Pre-order walk of the subtree under `id` (excluding `id` itself).
  /// Returning false from `visit` skips that node's subtree.
  void walk(NodeId id, const std::function<bool(NodeId)>& visit) const;

  /// Element ids in document order with this tag.
  std::vector<NodeId> elements_by_tag(std::string_view tag) const;

  bool is_ancestor(NodeId ancestor, NodeId node) const;

 private:
  friend class TreeBuilder;
  NodeId append(NodeId parent, Node node);

  std::vector<Node> nodes_;
};

/// Parses HTML with error recovery: unknown or mismatched markup never fails.
/// Throws ParseFailure only when the input is not valid UTF-8.
Document parse_html(std::string_view html);

/// Decodes character references (named and numeric) in text.
std::string decode_entities(std::string_view s);

/// Whitespace-normalized text of a subtree. Script, style, template and
/// noscript content is skipped; block-level boundaries separate words.
std::string text_content(const Document& doc, NodeId id);

/// Like text_content, but subtrees for which `exclude` returns true are dropped.
std::string text_content_filtered(const Document& doc, NodeId id,
                                  const std::function<bool(NodeId)>& exclude);

bool is_block_level(std::string_view tag);
bool is_hidden_content(std::string_view tag);

}  // namespace semlink::html
