#pragma once

#include <memory>
#include <string>
#include <thread>

namespace semlink {

/// In-process implementation of the /embed and /health wire protocol backed
/// by hash_embed. Used for hermetic tests of the remote backend and for
/// `semlink serve-embed`.
class MockEmbedServer {
 public:
  explicit MockEmbedServer(std::size_t max_batch = 256);
  ~MockEmbedServer();
  MockEmbedServer(const MockEmbedServer&) = delete;
  MockEmbedServer& operator=(const MockEmbedServer&) = delete;

  /// Binds to host:port (port 0 picks a free one) and serves on a background
  /// thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Serves on the calling thread until stop() is called from elsewhere.
  bool listen_blocking(const std::string& host, int port);
  void stop();

  std::string endpoint() const;
  std::size_t requests_served() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace semlink
