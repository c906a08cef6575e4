#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>

#include <json.hpp>

namespace semlink::testing {

/// Serves files under `root` over HTTP on 127.0.0.1, with a few synthetic
/// routes:
///   /redirect/N      N redirect hops ending at /courses/algebra.html
///   /status/CODE     a small page with that status
///   /slow            answers after two seconds
///   /latin1.html     an ISO-8859-1 page declared in Content-Type
/// Missing files answer 404.
class FixtureServer {
 public:
  explicit FixtureServer(std::filesystem::path root);
  ~FixtureServer();
  FixtureServer(const FixtureServer&) = delete;
  FixtureServer& operator=(const FixtureServer&) = delete;

  std::string base_url() const;
  std::size_t hits(const std::string& path) const;
  std::size_t total_hits() const;
  int max_in_flight() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Chat-completion endpoint at /v1/chat/completions. `reply` maps the
/// request body to the assistant message content. The first `fail_first`
/// requests answer 500.
class MockLlmServer {
 public:
  using Reply = std::function<std::string(const nlohmann::json& request)>;
  explicit MockLlmServer(Reply reply, double delay_s = 0.0, int fail_first = 0);
  ~MockLlmServer();
  MockLlmServer(const MockLlmServer&) = delete;
  MockLlmServer& operator=(const MockLlmServer&) = delete;

  std::string endpoint() const;
  std::size_t requests() const;
  nlohmann::json last_request() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Unique empty directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace semlink::testing
