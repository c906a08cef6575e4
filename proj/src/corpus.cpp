#include "semlink/corpus.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "semlink/errors.hpp"
#include "semlink/rng.hpp"
#include "semlink/text.hpp"

namespace semlink {

using nlohmann::json;

namespace {

bool blank(std::string_view s) { return text::normalize_whitespace(s).empty(); }

// Line numbers for the top-level entries of the "pairs" array. Counts lines
// by scanning the raw document while skipping string contents.
std::vector<std::size_t> pair_start_lines(std::string_view doc) {
  std::vector<std::size_t> lines;
  std::size_t line = 1;
  int depth = 0;
  int pairs_depth = -1;
  bool in_string = false;
  std::string last_key;
  std::string current;
  bool expect_pairs_array = false;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const char c = doc[i];
    if (c == '\n') ++line;
    if (in_string) {
      if (c == '\\') {
        if (i + 1 < doc.size()) current.push_back(doc[++i]);
      } else if (c == '"') {
        in_string = false;
        last_key = current;
      } else {
        current.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        in_string = true;
        current.clear();
        break;
      case ':':
        expect_pairs_array = depth == 1 && last_key == "pairs";
        break;
      case '[':
        ++depth;
        if (expect_pairs_array) pairs_depth = depth;
        expect_pairs_array = false;
        break;
      case '{':
        if (depth == pairs_depth) lines.push_back(line);
        ++depth;
        expect_pairs_array = false;
        break;
      case ']':
      case '}':
        if (depth == pairs_depth && c == ']') pairs_depth = -1;
        --depth;
        break;
      default:
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') expect_pairs_array = false;
        break;
    }
  }
  return lines;
}

std::size_t line_of_offset(std::string_view doc, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < doc.size(); ++i) {
    if (doc[i] == '\n') ++line;
  }
  return line;
}

struct Reader {
  const std::string& prefix;
  std::size_t line;

  [[noreturn]] void fail(const std::string& field, const std::string& detail) const {
    throw SchemaViolation(prefix + field, line, detail);
  }

  const json& member(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "required field missing");
    return *it;
  }

  std::string string(const json& obj, const std::string& path, const char* key) const {
    const json& v = member(obj, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
  }

  long long integer(const json& obj, const std::string& path, const char* key) const {
    const json& v = member(obj, path, key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long long>();
  }

  double number(const json& obj, const std::string& path, const char* key) const {
    const json& v = member(obj, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
  }

  const json& array(const json& obj, const std::string& path, const char* key) const {
    const json& v = member(obj, path, key);
    if (!v.is_array()) fail(path + "." + key, "expected an array");
    return v;
  }
};

json leftovers(const json& obj, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (const char* k : known) is_known = is_known || it.key() == k;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

void merge_extra(json& target, const json& extra) {
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!target.contains(it.key())) target[it.key()] = it.value();
  }
}

}  // namespace

std::string_view to_string(RejectReason r) {
  return r == RejectReason::EmptySource ? "EmptySource" : "EmptyTarget";
}

std::string_view to_string(Label l) {
  switch (l) {
    case Label::Positive: return "positive";
    case Label::Negative: return "negative";
    case Label::Unlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view to_string(LinkKind k) { return k == LinkKind::Image ? "image" : "text"; }

std::string_view to_string(ImageTextKind k) {
  switch (k) {
    case ImageTextKind::Alt: return "alt";
    case ImageTextKind::Title: return "title";
    case ImageTextKind::Ocr: return "ocr";
  }
  return "alt";
}

CleanResult clean_pair(const CorpusPair& pair) {
  bool has_image_text = false;
  for (const auto& it : pair.link.image_texts) has_image_text = has_image_text || !blank(it.text);
  if (blank(pair.link.anchor_text) && !has_image_text) {
    return CleanResult::reject(RejectReason::EmptySource);
  }
  bool has_header = false;
  for (const auto& h : pair.page.headers) has_header = has_header || !blank(h.text);
  bool has_keyword = false;
  for (const auto& k : pair.page.keywords) has_keyword = has_keyword || !blank(k.term);
  if (blank(pair.page.title) && !has_header && !has_keyword) {
    return CleanResult::reject(RejectReason::EmptyTarget);
  }
  return CleanResult::accept();
}

CorpusSplit split_corpus(std::vector<CorpusPair> pairs, double ratio, std::uint64_t seed) {
  if (pairs.empty()) throw EmptyCorpus();
  if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("split ratio must be in (0, 1)");
  Rng rng(seed);
  rng.shuffle(pairs);
  const auto cut = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(pairs.size())));
  CorpusSplit split;
  split.seed = seed;
  split.train.assign(std::make_move_iterator(pairs.begin()),
                     std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(cut)));
  split.validation.assign(std::make_move_iterator(pairs.begin() + static_cast<std::ptrdiff_t>(cut)),
                          std::make_move_iterator(pairs.end()));
  if (split.validation.empty()) {
    split.warning = "validation split is empty (corpus of " + std::to_string(pairs.size()) + ")";
  } else if (split.train.empty()) {
    split.warning = "training split is empty (corpus of " + std::to_string(pairs.size()) + ")";
  }
  return split;
}

json to_json(const CorpusPair& pair) {
  json link = {{"url", pair.link.source_url},
               {"anchor_text", pair.link.anchor_text},
               {"link_kind", to_string(pair.link.link_kind)},
               {"side_texts", json::array()},
               {"image_texts", json::array()}};
  for (const auto& s : pair.link.side_texts) {
    link["side_texts"].push_back({{"text", s.text}, {"dom_distance", s.dom_distance}});
  }
  for (const auto& it : pair.link.image_texts) {
    link["image_texts"].push_back({{"kind", to_string(it.kind)}, {"text", it.text}});
  }
  merge_extra(link, pair.link.extra);

  json page = {{"url", pair.page.target_url},
               {"http_status", pair.page.http_status},
               {"title", pair.page.title},
               {"headers", json::array()},
               {"keywords", json::array()}};
  if (pair.page.final_url) page["final_url"] = *pair.page.final_url;
  for (const auto& h : pair.page.headers) page["headers"].push_back({{"level", h.level}, {"text", h.text}});
  for (const auto& k : pair.page.keywords) page["keywords"].push_back({{"term", k.term}, {"score", k.score}});
  merge_extra(page, pair.page.extra);

  json out = {{"link", std::move(link)},
              {"page", std::move(page)},
              {"label", to_string(pair.label)},
              {"collected_at", pair.collected_at}};
  merge_extra(out, pair.extra);
  return out;
}

CorpusPair pair_from_json(const json& j, const std::string& prefix, std::size_t line) {
  const Reader r{prefix, line};
  if (!j.is_object()) r.fail("", "expected an object");
  CorpusPair pair;

  const json& link = r.member(j, "", "link");
  pair.link.source_url = r.string(link, "link", "url");
  pair.link.anchor_text = r.string(link, "link", "anchor_text");
  const std::string kind = r.string(link, "link", "link_kind");
  if (kind == "text") {
    pair.link.link_kind = LinkKind::Text;
  } else if (kind == "image") {
    pair.link.link_kind = LinkKind::Image;
  } else {
    r.fail("link.link_kind", "expected \"text\" or \"image\"");
  }
  const json& sides = r.array(link, "link", "side_texts");
  for (std::size_t i = 0; i < sides.size(); ++i) {
    const std::string path = "link.side_texts[" + std::to_string(i) + "]";
    SideText s{r.string(sides[i], path, "text"),
               static_cast<int>(r.integer(sides[i], path, "dom_distance"))};
    if (s.dom_distance < 1) r.fail(path + ".dom_distance", "must be a positive integer");
    if (blank(s.text)) r.fail(path + ".text", "must be non-empty");
    if (!pair.link.side_texts.empty() && pair.link.side_texts.back().dom_distance > s.dom_distance) {
      r.fail(path + ".dom_distance", "side_texts must be sorted by ascending dom_distance");
    }
    pair.link.side_texts.push_back(std::move(s));
  }
  if (pair.link.side_texts.size() > 5) r.fail("link.side_texts", "at most 5 entries allowed");
  const json& images = r.array(link, "link", "image_texts");
  for (std::size_t i = 0; i < images.size(); ++i) {
    const std::string path = "link.image_texts[" + std::to_string(i) + "]";
    const std::string k = r.string(images[i], path, "kind");
    ImageText it;
    if (k == "alt") {
      it.kind = ImageTextKind::Alt;
    } else if (k == "title") {
      it.kind = ImageTextKind::Title;
    } else if (k == "ocr") {
      it.kind = ImageTextKind::Ocr;
    } else {
      r.fail(path + ".kind", "expected alt, title or ocr");
    }
    it.text = r.string(images[i], path, "text");
    if (blank(it.text)) r.fail(path + ".text", "must be non-empty");
    pair.link.image_texts.push_back(std::move(it));
  }
  if (pair.link.link_kind == LinkKind::Text && !pair.link.image_texts.empty()) {
    r.fail("link.image_texts", "a text link carries no image texts");
  }
  pair.link.extra = leftovers(link, {"url", "anchor_text", "link_kind", "side_texts", "image_texts"});

  const json& page = r.member(j, "", "page");
  pair.page.target_url = r.string(page, "page", "url");
  pair.page.http_status = static_cast<int>(r.integer(page, "page", "http_status"));
  pair.page.title = r.string(page, "page", "title");
  if (page.contains("final_url")) pair.page.final_url = r.string(page, "page", "final_url");
  const json& headers = r.array(page, "page", "headers");
  for (std::size_t i = 0; i < headers.size(); ++i) {
    const std::string path = "page.headers[" + std::to_string(i) + "]";
    Header h{static_cast<int>(r.integer(headers[i], path, "level")), r.string(headers[i], path, "text")};
    if (h.level < 1 || h.level > 3) r.fail(path + ".level", "must be 1, 2 or 3");
    pair.page.headers.push_back(std::move(h));
  }
  const json& keywords = r.array(page, "page", "keywords");
  for (std::size_t i = 0; i < keywords.size(); ++i) {
    const std::string path = "page.keywords[" + std::to_string(i) + "]";
    Keyword k{r.string(keywords[i], path, "term"), r.number(keywords[i], path, "score")};
    if (!pair.page.keywords.empty() && pair.page.keywords.back().score < k.score) {
      r.fail(path + ".score", "keywords must be sorted by descending score");
    }
    pair.page.keywords.push_back(std::move(k));
  }
  pair.page.extra =
      leftovers(page, {"url", "http_status", "title", "final_url", "headers", "keywords"});

  const std::string label = r.string(j, "", "label");
  if (label == "positive") {
    pair.label = Label::Positive;
  } else if (label == "negative") {
    pair.label = Label::Negative;
  } else if (label == "unlabeled") {
    pair.label = Label::Unlabeled;
  } else {
    r.fail("label", "expected positive, negative or unlabeled");
  }
  if (pair.label == Label::Positive && pair.page.http_status != 200) {
    r.fail("page.http_status", "a positive pair requires status 200");
  }
  pair.collected_at = r.string(j, "", "collected_at");
  pair.extra = leftovers(j, {"link", "page", "label", "collected_at"});
  return pair;
}

std::string serialize_corpus(const CorpusFile& file) {
  // One pair per line keeps line numbers in schema errors meaningful.
  std::string out = "{\"schema\":" + json(kCorpusSchema).dump();
  for (auto it = file.extra.begin(); it != file.extra.end(); ++it) {
    if (it.key() == "schema" || it.key() == "pairs") continue;
    out += "," + json(it.key()).dump() + ":" + it.value().dump();
  }
  out += ",\"pairs\":[";
  for (std::size_t i = 0; i < file.pairs.size(); ++i) {
    out += i == 0 ? "\n" : ",\n";
    out += to_json(file.pairs[i]).dump();
  }
  out += file.pairs.empty() ? "]}\n" : "\n]}\n";
  return out;
}

CorpusFile parse_corpus(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    throw SchemaViolation("<document>", line_of_offset(document, e.byte), e.what());
  }
  CorpusFile file;
  // A bare array is accepted as a pair list without an envelope.
  const json* pairs = nullptr;
  if (doc.is_array()) {
    pairs = &doc;
  } else if (doc.is_object()) {
    const auto schema = doc.find("schema");
    if (schema == doc.end() || !schema->is_string()) {
      throw SchemaViolation("schema", 1, "missing schema tag");
    }
    if (schema->get<std::string>() != kCorpusSchema) {
      throw SchemaViolation("schema", 1, "unsupported schema " + schema->get<std::string>());
    }
    const auto it = doc.find("pairs");
    if (it == doc.end() || !it->is_array()) throw SchemaViolation("pairs", 1, "expected an array");
    pairs = &*it;
    file.extra = leftovers(doc, {"schema", "pairs"});
  } else {
    throw SchemaViolation("<document>", 1, "expected an object or array");
  }
  const auto lines = pair_start_lines(document);
  file.pairs.reserve(pairs->size());
  for (std::size_t i = 0; i < pairs->size(); ++i) {
    const std::size_t line = i < lines.size() ? lines[i] : 1;
    file.pairs.push_back(pair_from_json((*pairs)[i], "pairs[" + std::to_string(i) + "].", line));
  }
  return file;
}

CorpusFile read_corpus_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot open corpus file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoFailure("failed reading corpus file " + path.string());
  return parse_corpus(ss.str());
}

std::vector<CorpusPair> read_corpus(const std::filesystem::path& path) {
  return read_corpus_file(path).pairs;
}

void write_corpus(const CorpusFile& file, const std::filesystem::path& path) {
  const std::string body = serialize_corpus(file);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoFailure("cannot write " + tmp.string());
    out << body;
    out.flush();
    if (!out) throw IoFailure("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoFailure("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

void write_corpus(const std::vector<CorpusPair>& pairs, const std::filesystem::path& path) {
  write_corpus(CorpusFile{pairs, json::object()}, path);
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace semlink
