#include "semlink/url.hpp"

#include <algorithm>
#include <cctype>

namespace semlink {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim_ascii(std::string_view s) {
  auto is_ws = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f'; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

// RFC 3986 section 5.2.4.
std::string remove_dot_segments(std::string_view in) {
  std::string input(in);
  std::string output;
  while (!input.empty()) {
    if (input.starts_with("../")) {
      input.erase(0, 3);
    } else if (input.starts_with("./")) {
      input.erase(0, 2);
    } else if (input.starts_with("/./")) {
      input.erase(0, 2);
    } else if (input == "/.") {
      input = "/";
    } else if (input.starts_with("/../") || input == "/..") {
      input = input == "/.." ? "/" : input.substr(3);
      const auto slash = output.rfind('/');
      output.erase(slash == std::string::npos ? 0 : slash);
    } else if (input == "." || input == "..") {
      input.clear();
    } else {
      const std::size_t start = input[0] == '/' ? 1 : 0;
      const std::size_t next = input.find('/', start);
      const std::size_t len = next == std::string::npos ? input.size() : next;
      output.append(input, 0, len);
      input.erase(0, len);
    }
  }
  return output;
}

std::string merge_paths(const Url& base, std::string_view ref_path) {
  if (base.has_authority && base.path.empty()) return "/" + std::string(ref_path);
  const auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

}  // namespace

std::optional<Url> Url::parse(std::string_view ref) {
  ref = trim_ascii(ref);
  Url u;
  // Fragment and query are split off first.
  if (const auto hash = ref.find('#'); hash != std::string_view::npos) {
    u.has_fragment = true;
    u.fragment = std::string(ref.substr(hash + 1));
    ref = ref.substr(0, hash);
  }
  if (const auto q = ref.find('?'); q != std::string_view::npos) {
    u.has_query = true;
    u.query = std::string(ref.substr(q + 1));
    ref = ref.substr(0, q);
  }
  // Scheme: ALPHA *( ALPHA / DIGIT / "+" / "-" / "." ) ":" before any '/'.
  if (const auto colon = ref.find(':'); colon != std::string_view::npos) {
    const auto slash = ref.find('/');
    if (slash == std::string_view::npos || colon < slash) {
      const std::string_view scheme = ref.substr(0, colon);
      const bool valid = !scheme.empty() && std::isalpha(static_cast<unsigned char>(scheme[0])) &&
                         std::all_of(scheme.begin(), scheme.end(), [](char c) {
                           return std::isalnum(static_cast<unsigned char>(c)) || c == '+' ||
                                  c == '-' || c == '.';
                         });
      if (!valid) return std::nullopt;
      u.scheme = lower(scheme);
      ref = ref.substr(colon + 1);
    }
  }
  if (ref.starts_with("//")) {
    ref.remove_prefix(2);
    const auto end = ref.find('/');
    u.has_authority = true;
    u.authority = std::string(ref.substr(0, end));
    ref = end == std::string_view::npos ? std::string_view{} : ref.substr(end);
    if (u.authority.find_first_of(" <>\"\\") != std::string::npos) return std::nullopt;
  }
  u.path = std::string(ref);
  return u;
}

std::string Url::host() const {
  std::string_view a = authority;
  if (const auto at = a.rfind('@'); at != std::string_view::npos) a = a.substr(at + 1);
  if (a.starts_with('[')) {
    const auto close = a.find(']');
    return lower(a.substr(0, close == std::string_view::npos ? a.size() : close + 1));
  }
  if (const auto colon = a.rfind(':'); colon != std::string_view::npos) a = a.substr(0, colon);
  return lower(a);
}

int Url::port() const {
  std::string_view a = authority;
  if (const auto at = a.rfind('@'); at != std::string_view::npos) a = a.substr(at + 1);
  const auto close = a.rfind(']');
  const auto colon = a.rfind(':');
  if (colon != std::string_view::npos && (close == std::string_view::npos || colon > close) &&
      colon + 1 < a.size()) {
    int p = 0;
    for (char c : a.substr(colon + 1)) {
      if (!std::isdigit(static_cast<unsigned char>(c))) return -1;
      p = p * 10 + (c - '0');
      if (p > 65535) return -1;
    }
    return p;
  }
  if (scheme == "http") return 80;
  if (scheme == "https") return 443;
  return -1;
}

std::string Url::path_and_query() const {
  std::string out = path.empty() ? "/" : path;
  if (has_query) out += "?" + query;
  return out;
}

std::string Url::str() const {
  std::string out;
  if (!scheme.empty()) out += scheme + ":";
  if (has_authority) out += "//" + authority;
  out += path;
  if (has_query) out += "?" + query;
  if (has_fragment) out += "#" + fragment;
  return out;
}

std::optional<std::string> resolve_url(std::string_view base_str, std::string_view href) {
  const auto base = Url::parse(base_str);
  const auto ref = Url::parse(href);
  if (!base || !ref || !base->absolute()) return std::nullopt;

  // RFC 3986 section 5.2.2 (strict).
  Url t;
  if (ref->absolute()) {
    t = *ref;
    t.path = remove_dot_segments(ref->path);
  } else {
    if (ref->has_authority) {
      t.has_authority = true;
      t.authority = ref->authority;
      t.path = remove_dot_segments(ref->path);
      t.has_query = ref->has_query;
      t.query = ref->query;
    } else {
      if (ref->path.empty()) {
        t.path = base->path;
        t.has_query = ref->has_query ? true : base->has_query;
        t.query = ref->has_query ? ref->query : base->query;
      } else {
        t.path = ref->path.starts_with('/') ? remove_dot_segments(ref->path)
                                            : remove_dot_segments(merge_paths(*base, ref->path));
        t.has_query = ref->has_query;
        t.query = ref->query;
      }
      t.has_authority = base->has_authority;
      t.authority = base->authority;
    }
    t.scheme = base->scheme;
  }
  t.has_fragment = ref->has_fragment;
  t.fragment = ref->fragment;
  if ((t.scheme == "http" || t.scheme == "https") && (!t.has_authority || t.host().empty())) {
    return std::nullopt;
  }
  if ((t.scheme == "http" || t.scheme == "https") && t.path.empty()) t.path = "/";
  return t.str();
}

std::string url_host(std::string_view url) {
  const auto u = Url::parse(url);
  return u && u->has_authority ? u->host() : std::string{};
}

std::string href_scheme(std::string_view href) {
  const auto u = Url::parse(href);
  return u ? u->scheme : std::string{};
}

}  // namespace semlink
