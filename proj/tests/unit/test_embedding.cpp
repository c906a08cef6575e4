#include <doctest.h>

#include <cmath>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "semlink/embed_server.hpp"
#include "semlink/embedding.hpp"
#include "semlink/errors.hpp"
#include "semlink/http_client.hpp"

using namespace semlink;
using nlohmann::json;

namespace {

class CountingProvider final : public EmbeddingProvider {
 public:
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    ++calls;
    seen.insert(seen.end(), texts.begin(), texts.end());
    return HashEmbedder().embed_batch(texts);
  }
  ProviderDescriptor descriptor() const override { return {"counting", "v1"}; }
  int calls = 0;
  std::vector<std::string> seen;
};

class NarrowProvider final : public EmbeddingProvider {
 public:
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>&) override { return {}; }
  ProviderDescriptor descriptor() const override { return {"narrow", "v1"}; }
  std::size_t dim() const override { return 384; }
};

// Serves /embed with a canned reply.
struct CannedServer {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  explicit CannedServer(std::function<void(const httplib::Request&, httplib::Response&)> handler) {
    server.Post("/embed", handler);
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~CannedServer() {
    server.stop();
    thread.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port); }
};

RemoteEmbedConfig quick(const std::string& endpoint) {
  RemoteEmbedConfig c;
  c.endpoint = endpoint;
  c.timeout_s = 5;
  c.retry_backoff_s = 0.01;
  return c;
}

}  // namespace

TEST_CASE("embedding vector invariants") {
  CHECK_THROWS_AS(EmbeddingVector(std::vector<double>(10, 0.0)), DimensionMismatch);
  std::vector<double> v(kEmbeddingDim, 0.0);
  v[3] = NAN;
  CHECK_THROWS_AS(static_cast<void>(EmbeddingVector(v)), DimensionMismatch);
  CHECK(EmbeddingVector().norm() == 0.0);
}

TEST_CASE("hash embedding") {
  const auto a = hash_embed("Algebra homework");
  CHECK(a.size() == kEmbeddingDim);
  CHECK(std::abs(a.norm() - 1.0) < 1e-12);
  CHECK(a == hash_embed("Algebra homework"));
  CHECK(a == hash_embed("algebra   HOMEWORK!"));
  CHECK(hash_embed("").norm() == 0.0);
  CHECK(hash_embed("...").norm() == 0.0);
  CHECK(std::abs(hash_embed("\xe4\xb8\xad\xe6\x96\x87").norm() - 1.0) < 1e-12);

  const double near = cosine_similarity(a, hash_embed("algebra homework help"));
  const double far = cosine_similarity(a, hash_embed("telescope nebula"));
  CHECK(near > 0.6);
  CHECK(near > far);
  CHECK(cosine_similarity(a, EmbeddingVector()) == 0.0);
}

TEST_CASE("provider dimension check") {
  HashEmbedder h;
  CHECK_NOTHROW(require_standard_dim(h));
  NarrowProvider n;
  CHECK_THROWS_AS(require_standard_dim(n), DimensionMismatch);
}

TEST_CASE("cache sends only distinct misses") {
  CountingProvider p;
  EmbeddingCache cache(100);
  const auto first = cache.embed(p, {"a b", "c d", "a b"});
  CHECK(p.calls == 1);
  CHECK(p.seen == std::vector<std::string>{"a b", "c d"});
  CHECK(first[0] == first[2]);
  CHECK(first[0] == hash_embed("a b"));
  const auto second = cache.embed(p, {"c d", "e f"});
  CHECK(p.calls == 2);
  CHECK(p.seen.back() == "e f");
  CHECK(second[0] == first[1]);
  cache.embed(p, {"a b", "c d"});
  CHECK(p.calls == 2);
  CHECK(cache.size() == 3);
  CHECK(cache.hits() >= 3);
}

TEST_CASE("cache evicts least recently used") {
  CountingProvider p;
  EmbeddingCache cache(2);
  cache.embed(p, {"one"});
  cache.embed(p, {"two"});
  cache.embed(p, {"one"});    // refresh
  cache.embed(p, {"three"});  // evicts "two"
  CHECK(cache.size() == 2);
  const int before = p.calls;
  cache.embed(p, {"one"});
  CHECK(p.calls == before);
  cache.embed(p, {"two"});
  CHECK(p.calls == before + 1);
}

TEST_CASE("cache keys include the provider") {
  CountingProvider p;
  HashEmbedder h;
  EmbeddingCache cache;
  cache.embed(p, {"x1"});
  cache.embed(h, {"x1"});
  CHECK(cache.size() == 2);
}

TEST_CASE("mock server health and embed contract") {
  MockEmbedServer server(4);
  REQUIRE(server.start() > 0);
  const auto health = http::get(server.endpoint() + "/health");
  CHECK(health.status == 200);
  CHECK(json::parse(health.body)["dim"] == 512);

  const std::vector<std::string> texts = {"algebra", "nebula", "", "\xe4\xb8\xad\xe6\x96\x87"};
  const auto res = http::post_json(server.endpoint() + "/embed", json{{"texts", texts}}.dump());
  REQUIRE(res.status == 200);
  const json doc = json::parse(res.body);
  CHECK(doc["dim"] == 512);
  REQUIRE(doc["vectors"].size() == texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    CHECK(doc["vectors"][i].size() == 512);
    CHECK(EmbeddingVector(doc["vectors"][i].get<std::vector<double>>()) == hash_embed(texts[i]));
  }

  CHECK(http::post_json(server.endpoint() + "/embed", "not json").status == 400);
  CHECK(http::post_json(server.endpoint() + "/embed", R"({"texts":[]})").status == 400);
  CHECK(http::post_json(server.endpoint() + "/embed", R"({"texts":[1]})").status == 400);
  CHECK(http::post_json(server.endpoint() + "/embed", R"({"texts":["a","b","c","d","e"]})").status == 413);
}

TEST_CASE("remote embedder batches and preserves order") {
  MockEmbedServer server(3);
  REQUIRE(server.start() > 0);
  auto config = quick(server.endpoint());
  config.max_batch = 3;
  RemoteEmbedder remote(config);
  std::vector<std::string> texts;
  for (int i = 0; i < 7; ++i) texts.push_back("text number " + std::to_string(i));
  const auto vectors = remote.embed_batch(texts);
  REQUIRE(vectors.size() == 7);
  for (std::size_t i = 0; i < 7; ++i) CHECK(vectors[i] == hash_embed(texts[i]));
  CHECK(remote.requests() == 3);
  CHECK(server.requests_served() == 3);
  CHECK(remote.descriptor().provider == "remote");

  EmbeddingCache cache;
  cache.embed(remote, texts);
  cache.embed(remote, texts);
  CHECK(remote.requests() == 6);
}

TEST_CASE("remote embedder rejects contract violations") {
  CannedServer short_vec([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors":[[0.1,0.2]]})", "application/json");
  });
  CHECK_THROWS_AS(remote_embed({"x"}, quick(short_vec.endpoint())), ProtocolViolation);

  CannedServer wrong_count([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"vectors":[]})", "application/json");
  });
  CHECK_THROWS_AS(remote_embed({"x"}, quick(wrong_count.endpoint())), ProtocolViolation);

  CannedServer wrong_dim([](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"dim":384,"vectors":[]})", "application/json");
  });
  CHECK_THROWS_AS(remote_embed({"x"}, quick(wrong_dim.endpoint())), ProtocolViolation);

  CannedServer garbage([](const httplib::Request&, httplib::Response& res) {
    res.set_content("<html>", "text/html");
  });
  CHECK_THROWS_AS(remote_embed({"x"}, quick(garbage.endpoint())), ProtocolViolation);

  CannedServer rejecting([](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
    res.set_content("down", "text/plain");
  });
  try {
    remote_embed({"x"}, quick(rejecting.endpoint()));
    FAIL("expected ServerRejection");
  } catch (const ServerRejection& e) {
    CHECK(e.status() == 503);
  }

  CannedServer unnormalized([](const httplib::Request&, httplib::Response& res) {
    std::vector<double> v(512, 0.0);
    v[0] = 3.0;
    v[1] = 4.0;
    res.set_content(json{{"vectors", {v}}}.dump(), "application/json");
  });
  auto cfg = quick(unnormalized.endpoint());
  CHECK(remote_embed({"x"}, cfg)[0][0] == 3.0);
  cfg.normalize_remote = true;
  const auto n = remote_embed({"x"}, cfg);
  CHECK(n[0][0] == doctest::Approx(0.6));
  CHECK(n[0][1] == doctest::Approx(0.8));
}

TEST_CASE("unreachable endpoint is a transport failure after retries") {
  // Nothing listens on port 1; connections are refused at once.
  auto cfg = quick("http://127.0.0.1:1");
  cfg.max_attempts = 2;
  CHECK_THROWS_AS(remote_embed({"x"}, cfg), TransportFailure);
}
