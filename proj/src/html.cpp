#include "semlink/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "semlink/errors.hpp"
#include "semlink/text.hpp"

namespace semlink::html {

namespace {

const std::unordered_set<std::string_view> kVoidElements = {
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr"};

// Start tags that implicitly close an open <p>.
const std::unordered_set<std::string_view> kClosesParagraph = {
    "address", "article", "aside", "blockquote", "details", "div", "dl", "fieldset",
    "figcaption", "figure", "footer", "form", "h1", "h2", "h3", "h4", "h5", "h6",
    "header", "hr", "main", "menu", "nav", "ol", "p", "pre", "section", "table", "ul"};

const std::unordered_set<std::string_view> kBlockLevel = {
    "address", "article", "aside", "blockquote", "br", "caption", "dd", "details", "div",
    "dl", "dt", "fieldset", "figcaption", "figure", "footer", "form", "h1", "h2", "h3",
    "h4", "h5", "h6", "header", "hr", "li", "main", "nav", "ol", "option", "p", "pre",
    "section", "summary", "table", "tbody", "td", "tfoot", "th", "thead", "title", "tr", "ul"};

const std::unordered_set<std::string_view> kHidden = {"script", "style", "template", "noscript",
                                                      "head", "title"};

const std::unordered_map<std::string_view, char32_t> kNamedEntities = {
    {"amp", U'&'},      {"lt", U'<'},       {"gt", U'>'},       {"quot", U'"'},
    {"apos", U'\''},    {"nbsp", 0xA0},     {"copy", 0xA9},     {"reg", 0xAE},
    {"trade", 0x2122},  {"hellip", 0x2026}, {"mdash", 0x2014},  {"ndash", 0x2013},
    {"lsquo", 0x2018},  {"rsquo", 0x2019},  {"ldquo", 0x201C},  {"rdquo", 0x201D},
    {"middot", 0xB7},   {"bull", 0x2022},   {"laquo", 0xAB},    {"raquo", 0xBB},
    {"times", 0xD7},    {"divide", 0xF7},   {"euro", 0x20AC},   {"pound", 0xA3},
    {"yen", 0xA5},      {"cent", 0xA2},     {"sect", 0xA7},     {"para", 0xB6},
    {"deg", 0xB0},      {"plusmn", 0xB1},   {"frac12", 0xBD},   {"frac14", 0xBC},
    {"frac34", 0xBE},   {"iexcl", 0xA1},    {"iquest", 0xBF},   {"shy", 0xAD},
    {"ensp", 0x2002},   {"emsp", 0x2003},   {"thinsp", 0x2009}, {"zwnj", 0x200C},
    {"zwj", 0x200D},    {"larr", 0x2190},   {"rarr", 0x2192},   {"uarr", 0x2191},
    {"darr", 0x2193},   {"agrave", 0xE0},   {"aacute", 0xE1},   {"eacute", 0xE9},
    {"egrave", 0xE8},   {"ecirc", 0xEA},    {"iacute", 0xED},   {"oacute", 0xF3},
    {"uacute", 0xFA},   {"ntilde", 0xF1},   {"ouml", 0xF6},     {"uuml", 0xFC},
    {"auml", 0xE4},     {"ccedil", 0xE7},   {"szlig", 0xDF},    {"Eacute", 0xC9}};

// Entities browsers accept without a trailing semicolon.
const std::unordered_set<std::string_view> kLegacyEntities = {"amp", "lt", "gt", "quot", "nbsp",
                                                              "copy", "reg"};

bool ieq_prefix(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; }

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

struct Token {
  enum class Kind { Text, StartTag, EndTag } kind;
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  bool self_closing = false;
  std::string text;
};

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src) : src_(src) {}

  bool next(Token& tok) {
    if (!pending_raw_end_.empty()) return read_raw_text(tok);
    while (pos_ < src_.size() && src_[pos_] == '<') {
      const std::size_t before = pos_;
      if (read_markup(tok)) return true;
      if (!pending_raw_end_.empty()) return read_raw_text(tok);
      if (pos_ == before) break;  // bare '<' is text
    }
    if (pos_ >= src_.size()) return false;
    return read_text(tok);
  }

 private:
  bool read_text(Token& tok) {
    std::size_t end = pos_ + 1;
    while (end < src_.size() && src_[end] != '<') ++end;
    tok = Token{Token::Kind::Text, {}, {}, false, decode_entities(src_.substr(pos_, end - pos_))};
    pos_ = end;
    return true;
  }

  // Content of script/style (raw) or title/textarea (escapable raw text).
  bool read_raw_text(Token& tok) {
    const std::string closing = "</" + pending_raw_end_;
    std::size_t end = pos_;
    while (end < src_.size() && !ieq_prefix(src_, end, closing)) ++end;
    const std::string_view raw = src_.substr(pos_, end - pos_);
    const bool escapable = pending_raw_end_ == "title" || pending_raw_end_ == "textarea";
    tok = Token{Token::Kind::Text, {}, {}, false, escapable ? decode_entities(raw) : std::string(raw)};
    pos_ = end;
    pending_raw_end_.clear();
    if (tok.text.empty()) return next(tok);
    return true;
  }

  // Returns true if a tag token was produced. Comments and declarations are
  // consumed and yield false with pos_ advanced. A bare '<' yields false with
  // pos_ unchanged so the caller emits it as text.
  bool read_markup(Token& tok) {
    const std::size_t start = pos_;
    if (ieq_prefix(src_, start, "<!--")) {
      const auto end = src_.find("-->", start + 4);
      pos_ = end == std::string_view::npos ? src_.size() : end + 3;
      return false;
    }
    if (start + 1 < src_.size() && (src_[start + 1] == '!' || src_[start + 1] == '?')) {
      const auto end = src_.find('>', start);
      pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      return false;
    }
    const bool end_tag = start + 1 < src_.size() && src_[start + 1] == '/';
    std::size_t p = start + (end_tag ? 2 : 1);
    if (p >= src_.size() || !std::isalpha(static_cast<unsigned char>(src_[p]))) {
      if (end_tag) {
        // "</>" or "</ junk>" is a bogus comment.
        const auto end = src_.find('>', start);
        pos_ = end == std::string_view::npos ? src_.size() : end + 1;
      }
      return false;
    }
    std::size_t name_end = p;
    while (name_end < src_.size() && !is_space(src_[name_end]) && src_[name_end] != '/' &&
           src_[name_end] != '>') {
      ++name_end;
    }
    tok = Token{end_tag ? Token::Kind::EndTag : Token::Kind::StartTag,
                lower(src_.substr(p, name_end - p)), {}, false, {}};
    p = name_end;
    // Attributes.
    while (p < src_.size()) {
      while (p < src_.size() && (is_space(src_[p]) || src_[p] == '/')) {
        if (src_[p] == '/' && p + 1 < src_.size() && src_[p + 1] == '>') tok.self_closing = true;
        ++p;
      }
      if (p >= src_.size() || src_[p] == '>') break;
      std::size_t an = p;
      while (an < src_.size() && !is_space(src_[an]) && src_[an] != '/' && src_[an] != '>' &&
             src_[an] != '=') {
        ++an;
      }
      if (an == p) ++an;  // stray '=' as attribute name start
      std::string name = lower(src_.substr(p, an - p));
      p = an;
      while (p < src_.size() && is_space(src_[p])) ++p;
      std::string value;
      if (p < src_.size() && src_[p] == '=') {
        ++p;
        while (p < src_.size() && is_space(src_[p])) ++p;
        if (p < src_.size() && (src_[p] == '"' || src_[p] == '\'')) {
          const char quote = src_[p];
          const auto close = src_.find(quote, p + 1);
          const std::size_t vend = close == std::string_view::npos ? src_.size() : close;
          value = decode_entities(src_.substr(p + 1, vend - p - 1));
          p = close == std::string_view::npos ? src_.size() : close + 1;
        } else {
          std::size_t vend = p;
          while (vend < src_.size() && !is_space(src_[vend]) && src_[vend] != '>') ++vend;
          value = decode_entities(src_.substr(p, vend - p));
          p = vend;
        }
      }
      if (!end_tag) tok.attributes.emplace_back(std::move(name), std::move(value));
    }
    pos_ = p < src_.size() ? p + 1 : src_.size();
    if (!end_tag && (tok.name == "script" || tok.name == "style" || tok.name == "title" ||
                     tok.name == "textarea")) {
      pending_raw_end_ = tok.name;
    }
    return true;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::string pending_raw_end_;
};

}  // namespace

const std::string* Node::attribute(std::string_view name) const {
  for (const auto& [k, v] : attributes) {
    if (k == name) return &v;
  }
  return nullptr;
}

Document::Document() { nodes_.push_back(Node{NodeKind::Document, {}, {}, {}, 0, {}}); }

NodeId Document::append(NodeId parent, Node node) {
  node.parent = parent;
  nodes_.push_back(std::move(node));
  const NodeId id = nodes_.size() - 1;
  nodes_[parent].children.push_back(id);
  return id;
}

std::vector<std::size_t> Document::path_of(NodeId id) const {
  std::vector<std::size_t> path;
  while (id != root()) {
    const auto& siblings = nodes_[nodes_[id].parent].children;
    path.push_back(static_cast<std::size_t>(
        std::find(siblings.begin(), siblings.end(), id) - siblings.begin()));
    id = nodes_[id].parent;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<NodeId> Document::node_at(const std::vector<std::size_t>& path) const {
  NodeId id = root();
  for (std::size_t index : path) {
    if (index >= nodes_[id].children.size()) return std::nullopt;
    id = nodes_[id].children[index];
  }
  return id;
}

void Document::walk(NodeId id, const std::function<bool(NodeId)>& visit) const {
  std::vector<NodeId> stack(nodes_[id].children.rbegin(), nodes_[id].children.rend());
  while (!stack.empty()) {
    const NodeId n = stack.back();
    stack.pop_back();
    if (!visit(n)) continue;
    const auto& ch = nodes_[n].children;
    stack.insert(stack.end(), ch.rbegin(), ch.rend());
  }
}

std::vector<NodeId> Document::elements_by_tag(std::string_view tag) const {
  std::vector<NodeId> out;
  walk(root(), [&](NodeId n) {
    if (nodes_[n].is_element(tag)) out.push_back(n);
    return true;
  });
  return out;
}

bool Document::is_ancestor(NodeId ancestor, NodeId node) const {
  while (node != root()) {
    node = nodes_[node].parent;
    if (node == ancestor) return true;
  }
  return false;
}

class TreeBuilder {
 public:
  explicit TreeBuilder(Document& doc) : doc_(doc), stack_{doc.root()} {}

  void consume(Token& tok) {
    switch (tok.kind) {
      case Token::Kind::Text:
        if (!tok.text.empty()) add_text(std::move(tok.text));
        break;
      case Token::Kind::StartTag:
        start_tag(tok);
        break;
      case Token::Kind::EndTag:
        end_tag(tok.name);
        break;
    }
  }

 private:
  const std::string& current_tag() const { return doc_.nodes_[stack_.back()].tag; }

  void add_text(std::string text) {
    auto& parent = doc_.nodes_[stack_.back()];
    if (!parent.children.empty()) {
      auto& last = doc_.nodes_[parent.children.back()];
      if (last.kind == NodeKind::Text) {
        last.text += text;
        return;
      }
    }
    doc_.append(stack_.back(), Node{NodeKind::Text, {}, {}, std::move(text), 0, {}});
  }

  // Index in stack_ of the nearest open element named `tag`, stopping at any
  // of `boundaries`.
  std::optional<std::size_t> find_open(std::string_view tag,
                                       std::initializer_list<std::string_view> boundaries) const {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      const auto& t = doc_.nodes_[stack_[i]].tag;
      if (t == tag) return i;
      if (std::find(boundaries.begin(), boundaries.end(), t) != boundaries.end()) break;
    }
    return std::nullopt;
  }

  void pop_to(std::size_t index) { stack_.resize(index); }

  void close_if_open(std::string_view tag, std::initializer_list<std::string_view> boundaries) {
    if (auto i = find_open(tag, boundaries)) pop_to(*i);
  }

  bool in_foreign_content() const {
    return find_open("svg", {}).has_value() || find_open("math", {}).has_value();
  }

  void start_tag(Token& tok) {
    const std::string& name = tok.name;
    if ((name == "html" || name == "body" || name == "head") && find_open(name, {})) return;

    const std::initializer_list<std::string_view> kScope = {
        "table", "td", "th", "caption", "button", "html", "template"};
    if (kClosesParagraph.contains(name)) close_if_open("p", kScope);
    if (name == "li") close_if_open("li", {"ul", "ol", "menu", "table"});
    if (name == "dt" || name == "dd") {
      close_if_open("dt", {"dl", "table"});
      close_if_open("dd", {"dl", "table"});
    }
    if (name == "option") close_if_open("option", {"select", "datalist"});
    if (name == "tr") close_if_open("tr", {"table", "tbody", "thead", "tfoot"});
    if (name == "td" || name == "th") {
      close_if_open("td", {"tr", "table"});
      close_if_open("th", {"tr", "table"});
    }
    if (name == "a") close_if_open("a", {});
    if (name.size() == 2 && name[0] == 'h' && name[1] >= '1' && name[1] <= '6') {
      const auto& cur = current_tag();
      if (cur.size() == 2 && cur[0] == 'h' && cur[1] >= '1' && cur[1] <= '6') stack_.pop_back();
    }

    const NodeId id = doc_.append(
        stack_.back(), Node{NodeKind::Element, name, std::move(tok.attributes), {}, 0, {}});
    const bool self_closing = tok.self_closing && in_foreign_content();
    if (!kVoidElements.contains(name) && !self_closing) stack_.push_back(id);
  }

  void end_tag(const std::string& name) {
    if (name == "br") {
      doc_.append(stack_.back(), Node{NodeKind::Element, "br", {}, {}, 0, {}});
      return;
    }
    if (auto i = find_open(name, {})) pop_to(*i);
  }

  Document& doc_;
  std::vector<NodeId> stack_;
};

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    std::size_t j = i + 1;
    if (j < s.size() && s[j] == '#') {
      ++j;
      const bool hex = j < s.size() && (s[j] == 'x' || s[j] == 'X');
      if (hex) ++j;
      const std::size_t digits_start = j;
      std::uint32_t value = 0;
      while (j < s.size() && (hex ? std::isxdigit(static_cast<unsigned char>(s[j]))
                                  : std::isdigit(static_cast<unsigned char>(s[j])))) {
        const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(s[j])));
        value = value * (hex ? 16 : 10) + static_cast<std::uint32_t>(c <= '9' ? c - '0' : c - 'a' + 10);
        if (value > 0x10FFFF) value = 0x110000;
        ++j;
      }
      if (j == digits_start) {
        out.push_back(s[i++]);
        continue;
      }
      if (j < s.size() && s[j] == ';') ++j;
      char32_t cp = value;
      if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
      text::append_utf8(out, cp);
      i = j;
      continue;
    }
    while (j < s.size() && std::isalnum(static_cast<unsigned char>(s[j])) && j - i <= 10) ++j;
    const std::string_view name = s.substr(i + 1, j - i - 1);
    const bool terminated = j < s.size() && s[j] == ';';
    const auto it = kNamedEntities.find(name);
    if (it != kNamedEntities.end() && (terminated || kLegacyEntities.contains(name))) {
      text::append_utf8(out, it->second);
      i = terminated ? j + 1 : j;
    } else {
      out.push_back(s[i++]);
    }
  }
  return out;
}

Document parse_html(std::string_view html) {
  if (!text::is_valid_utf8(html)) throw ParseFailure("document is not valid UTF-8");
  if (html.starts_with("\xEF\xBB\xBF")) html.remove_prefix(3);
  Document doc;
  TreeBuilder builder(doc);
  Tokenizer tokenizer(html);
  Token tok;
  while (tokenizer.next(tok)) builder.consume(tok);
  return doc;
}

bool is_block_level(std::string_view tag) { return kBlockLevel.contains(tag); }
bool is_hidden_content(std::string_view tag) { return kHidden.contains(tag); }

std::string text_content_filtered(const Document& doc, NodeId id,
                                  const std::function<bool(NodeId)>& exclude) {
  std::string raw;
  // Iterative walk that also records block exits so boundaries get a space.
  struct Frame {
    NodeId node;
    bool exiting;
  };
  std::vector<Frame> stack{{id, false}};
  while (!stack.empty()) {
    const Frame f = stack.back();
    stack.pop_back();
    const Node& n = doc.node(f.node);
    if (f.exiting) {
      raw.push_back(' ');
      continue;
    }
    if (f.node != id && exclude && exclude(f.node)) continue;
    if (n.kind == NodeKind::Text) {
      raw += n.text;
      continue;
    }
    if (n.kind == NodeKind::Element && is_hidden_content(n.tag) && f.node != id) continue;
    const bool block = n.kind == NodeKind::Element && is_block_level(n.tag);
    if (block) {
      raw.push_back(' ');
      stack.push_back({f.node, true});
    }
    for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) stack.push_back({*it, false});
  }
  return text::normalize_whitespace(raw);
}

std::string text_content(const Document& doc, NodeId id) {
  return text_content_filtered(doc, id, nullptr);
}

}  // namespace semlink::html
