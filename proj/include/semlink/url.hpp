#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace semlink {

/// An RFC 3986 reference split into components. `has_*` distinguishes an
/// empty component from an absent one.
struct Url {
  std::string scheme;
  bool has_authority = false;
  std::string authority;
  std::string path;
  bool has_query = false;
  std::string query;
  bool has_fragment = false;
  std::string fragment;

  static std::optional<Url> parse(std::string_view ref);

  bool absolute() const { return !scheme.empty(); }
  std::string host() const;  // lower-cased, no port, no userinfo
  int port() const;          // explicit port or the scheme default; -1 if unknown
  std::string path_and_query() const;
  std::string str() const;
};

/// Resolves `href` against an absolute `base`. Returns nullopt when either
/// reference is unparseable or the base is not absolute.
std::optional<std::string> resolve_url(std::string_view base, std::string_view href);

/// Lower-cased host of an absolute URL, or empty.
std::string url_host(std::string_view url);

/// Scheme of a raw href, lower-cased, or empty when the href is relative.
std::string href_scheme(std::string_view href);

}  // namespace semlink
