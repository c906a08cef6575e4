#include "semlink/http_client.hpp"

#include <chrono>
#include <cmath>

#include <httplib.h>

#include "semlink/url.hpp"

namespace semlink::http {

namespace {

struct Target {
  std::string origin;  // scheme://host:port
  std::string path;
};

Target split(const std::string& url) {
  const auto u = Url::parse(url);
  if (!u || !u->absolute() || !u->has_authority || (u->scheme != "http" && u->scheme != "https")) {
    throw TransportFailure("unsupported URL: " + url);
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (u->scheme == "https") throw TransportFailure("https support not compiled in: " + url);
#endif
  return {u->scheme + "://" + u->authority, u->path_and_query()};
}

httplib::Client make_client(const Target& t, const Options& o) {
  httplib::Client client(t.origin);
  const auto secs = static_cast<time_t>(o.timeout_s);
  const auto usecs = static_cast<time_t>((o.timeout_s - std::floor(o.timeout_s)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  client.set_follow_location(false);
  client.set_keep_alive(false);
  return client;
}

httplib::Headers headers_of(const Options& o) {
  httplib::Headers h{{"User-Agent", o.user_agent}};
  for (const auto& [k, v] : o.headers) h.emplace(k, v);
  return h;
}

Response finish(httplib::Result&& res, const std::string& url, std::chrono::steady_clock::time_point start,
                const Options& o) {
  if (!res) {
    const auto err = res.error();
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const std::string msg = httplib::to_string(err) + " (" + url + ")";
    if (err == httplib::Error::ConnectionTimeout || elapsed >= o.timeout_s * 0.95) {
      throw TimeoutError("timeout: " + msg);
    }
    throw TransportFailure("transport failure: " + msg);
  }
  Response r;
  r.status = res->status;
  r.body = std::move(res->body);
  r.content_type = res->get_header_value("Content-Type");
  r.location = res->get_header_value("Location");
  return r;
}

}  // namespace

Response get(const std::string& url, const Options& options) {
  const Target t = split(url);
  auto client = make_client(t, options);
  const auto start = std::chrono::steady_clock::now();
  return finish(client.Get(t.path, headers_of(options)), url, start, options);
}

Response post_json(const std::string& url, const std::string& body, const Options& options) {
  const Target t = split(url);
  auto client = make_client(t, options);
  const auto start = std::chrono::steady_clock::now();
  return finish(client.Post(t.path, headers_of(options), body, "application/json"), url, start,
                options);
}

}  // namespace semlink::http
