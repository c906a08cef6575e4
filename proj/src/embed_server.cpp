#include "semlink/embed_server.hpp"

#include <atomic>

#include <httplib.h>
#include <json.hpp>

#include "semlink/embedding.hpp"

namespace semlink {

using nlohmann::json;

struct MockEmbedServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::string host = "127.0.0.1";
  int port = 0;
  std::size_t max_batch;
  std::atomic<std::size_t> served{0};

  explicit Impl(std::size_t batch) : max_batch(batch) {
    auto error = [](httplib::Response& res, int status, const std::string& msg) {
      res.status = status;
      res.set_content(json{{"error", msg}}.dump(), "application/json");
    };
    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(json{{"status", "ok"}, {"model", "semlink-hash-v1"}, {"dim", 512}}.dump(),
                      "application/json");
    });
    server.Post("/embed", [this, error](const httplib::Request& req, httplib::Response& res) {
      ++served;
      json body;
      try {
        body = json::parse(req.body);
      } catch (const json::exception&) {
        return error(res, 400, "request body is not JSON");
      }
      if (!body.is_object() || !body.contains("texts") || !body["texts"].is_array()) {
        return error(res, 400, "expected {\"texts\": [string, ...]}");
      }
      const json& texts = body["texts"];
      if (texts.empty()) return error(res, 400, "empty text list");
      if (texts.size() > max_batch) {
        return error(res, 413, "at most " + std::to_string(max_batch) + " texts per request");
      }
      json vectors = json::array();
      for (const json& t : texts) {
        if (!t.is_string()) return error(res, 400, "texts must be strings");
        const EmbeddingVector e = hash_embed(t.get<std::string>());
        vectors.push_back(json(std::vector<double>(e.values().begin(), e.values().end())));
      }
      res.set_content(json{{"model", "semlink-hash-v1"}, {"dim", 512}, {"vectors", vectors}}.dump(),
                      "application/json");
    });
    server.set_exception_handler([error](const httplib::Request&, httplib::Response& res,
                                         std::exception_ptr ep) {
      std::string msg = "internal error";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        msg = e.what();
      } catch (...) {
      }
      error(res, 500, msg);
    });
  }
};

MockEmbedServer::MockEmbedServer(std::size_t max_batch) : impl_(std::make_unique<Impl>(max_batch)) {}

MockEmbedServer::~MockEmbedServer() { stop(); }

int MockEmbedServer::start(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port == 0 ? impl_->server.bind_to_any_port(host) : port;
  if (port != 0 && !impl_->server.bind_to_port(host, port)) return -1;
  if (impl_->port < 0) return -1;
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

bool MockEmbedServer::listen_blocking(const std::string& host, int port) {
  impl_->host = host;
  impl_->port = port;
  return impl_->server.listen(host, port);
}

void MockEmbedServer::stop() {
  if (!impl_) return;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string MockEmbedServer::endpoint() const {
  return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

std::size_t MockEmbedServer::requests_served() const { return impl_->served.load(); }

}  // namespace semlink
