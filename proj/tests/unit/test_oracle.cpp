#include <doctest.h>

#include <sstream>

#include "semlink/errors.hpp"
#include "semlink/oracle.hpp"
#include "semlink/rng.hpp"
#include "semlink/siamese.hpp"
#include "synthetic.hpp"

using namespace semlink;
using nlohmann::json;

namespace {

HyperlinkContext link_with(std::string anchor, std::vector<std::string> sides) {
  HyperlinkContext l;
  l.source_url = "https://s.example/";
  l.anchor_text = std::move(anchor);
  int k = 1;
  for (auto& s : sides) l.side_texts.push_back({std::move(s), k++});
  return l;
}

PageContent page_with(std::string title) {
  PageContent p;
  p.target_url = "https://t.example/";
  p.http_status = 200;
  p.title = std::move(title);
  p.headers = {{1, "Course Overview"}};
  p.keywords = {{"algebra", 1.0}, {"homework", 0.5}};
  return p;
}

class FailingProvider final : public EmbeddingProvider {
 public:
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>&) override {
    throw TransportFailure("embed service down");
  }
  ProviderDescriptor descriptor() const override { return {"failing", "v1"}; }
};

}  // namespace

TEST_CASE("weight table") {
  CHECK(weight_of(FeatureSource::Anchor) == 1.0);
  CHECK(weight_of(FeatureSource::ImageOcr) == 1.0);
  CHECK(weight_of(FeatureSource::ImageAttr) == 1.0);
  CHECK(weight_of(FeatureSource::SideText, 1) == 0.9);
  CHECK(weight_of(FeatureSource::SideText, 5) == 0.5);
  CHECK(weight_of(FeatureSource::SideText, 0) == 0.0);
  CHECK(weight_of(FeatureSource::SideText, 10) == 0.0);
  CHECK(weight_of(FeatureSource::PageTitle) == 0.0);
  CHECK(weight_of(FeatureText{"x", FeatureSource::SideText, 2}) == 0.8);
}

TEST_CASE("source features: order, masks and blanks") {
  HyperlinkContext l = link_with("  Algebra   Course ", {"side one", "side two"});
  l.link_kind = LinkKind::Image;
  l.image_texts = {{ImageTextKind::Alt, "logo"}, {ImageTextKind::Ocr, "Welcome"}};
  const auto all = source_features(l);
  REQUIRE(all.size() == 5);
  CHECK(all[0] == FeatureText{"Algebra Course", FeatureSource::Anchor, 0});
  CHECK(all[1].source == FeatureSource::ImageAttr);
  CHECK(all[2].source == FeatureSource::ImageOcr);
  CHECK(all[3] == FeatureText{"side one", FeatureSource::SideText, 1});
  CHECK(all[4].side_rank == 2);

  CHECK(source_features(l, {true, false, false}).size() == 1);
  CHECK(source_features(l, {false, true, false}).size() == 2);
  CHECK(source_features(l, {false, false, true}).size() == 2);
  l.anchor_text = " ";
  CHECK(source_features(l).size() == 4);
}

TEST_CASE("target features cap headers and join keywords") {
  PageContent p = page_with("Title");
  p.headers.clear();
  for (int i = 0; i < 14; ++i) p.headers.push_back({2, "h" + std::to_string(i)});
  const auto t = target_features(p);
  REQUIRE(t.size() == 1 + kMaxHeaderFeatures + 1);
  CHECK(t[0].source == FeatureSource::PageTitle);
  CHECK(t[10].text == "h9");
  CHECK(t.back() == FeatureText{"algebra homework", FeatureSource::PageKeywords, 0});
  p.title.clear();
  p.headers.clear();
  p.keywords.clear();
  CHECK(target_features(p).empty());
}

TEST_CASE("aggregate: weighted max, first maximum wins, threshold inclusive") {
  std::vector<FeatureText> src = {{"a", FeatureSource::Anchor, 0}, {"s", FeatureSource::SideText, 1}};
  std::vector<FeatureText> tgt = {{"t1", FeatureSource::PageTitle, 0}, {"t2", FeatureSource::PageHeader, 0}};
  const std::vector<double> raw = {0.5, 0.6, 0.9, 0.2};
  const Verdict v = aggregate(src, tgt, raw, 0.7);
  REQUIRE(v.matrix.size() == 4);
  CHECK(v.matrix[2].weighted == doctest::Approx(0.81));
  CHECK(v.best == 2);
  CHECK(v.score == doctest::Approx(0.81));
  CHECK(v.decision == Decision::Valid);

  const std::vector<double> tie = {0.7, 0.7, 0.1, 0.1};
  const Verdict t = aggregate(src, tgt, tie, 0.7);
  CHECK(t.best == 0);
  CHECK(t.score == 0.7);
  CHECK(t.decision == Decision::Valid);
  CHECK(aggregate(src, tgt, tie, 0.71).decision == Decision::Irrelevant);

  CHECK_THROWS_AS(aggregate({}, tgt, {}, 0.7), NoSourceFeatures);
  CHECK_THROWS_AS(aggregate(src, {}, {}, 0.7), NoTargetFeatures);
  CHECK_THROWS_AS(aggregate(src, tgt, std::vector<double>(3), 0.7), DimensionMismatch);
}

TEST_CASE("deep side text never decides a valid verdict") {
  Rng rng(17);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<FeatureText> src;
    const int n = 1 + static_cast<int>(rng.below(6));
    for (int i = 0; i < n; ++i) {
      if (rng.uniform() < 0.3) {
        src.push_back({"a", FeatureSource::Anchor, 0});
      } else {
        src.push_back({"s", FeatureSource::SideText, 1 + static_cast<int>(rng.below(5))});
      }
    }
    std::vector<FeatureText> tgt(1 + rng.below(4), FeatureText{"t", FeatureSource::PageTitle, 0});
    std::vector<double> raw(src.size() * tgt.size());
    for (double& r : raw) r = rng.uniform();
    const Verdict v = aggregate(src, tgt, raw, 0.7);
    const FeatureText& best = v.sources[v.matrix[v.best].source];
    if (best.source == FeatureSource::SideText && best.side_rank >= 4) CHECK(v.decision == Decision::Irrelevant);
  }
}

TEST_CASE("batch verification agrees with per-pair scoring") {
  const SiameseModel model = SiameseModel::initialize({512, 32, 32}, 0.1, 8);
  HashEmbedder provider;
  EmbeddingCache cache;
  const auto pairs = testing::synthetic_corpus({2, 15, 0.2, 0.2, 4});
  BatchOptions serial;
  serial.parallel = false;
  serial.chunk_pairs = 7;
  const BatchOutcome a = batch_verify(model, provider, cache, std::span<const CorpusPair>(pairs), serial);
  const BatchOutcome b = batch_verify(model, provider, cache, std::span<const CorpusPair>(pairs));
  REQUIRE(a.results.size() == pairs.size());
  CHECK(a.report.pairs == pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    REQUIRE(a.results[i].verdict);
    REQUIRE(b.results[i].verdict);
    CHECK(a.results[i].verdict->score == b.results[i].verdict->score);
    const Verdict v = score_pair(model, provider, cache, pairs[i].link, pairs[i].page);
    CHECK(v.score == a.results[i].verdict->score);
    // Direct recomputation of one cell.
    const auto& cell = v.matrix[v.best];
    const auto eh = hash_embed(v.sources[cell.source].text);
    const auto ep = hash_embed(v.targets[cell.target].text);
    CHECK(cell.raw == score(model, eh.values(), ep.values()));
  }
}

TEST_CASE("per-pair failures are inline") {
  const SiameseModel model = SiameseModel::initialize({512, 16, 16}, 0.1, 8);
  HashEmbedder provider;
  EmbeddingCache cache;
  const HyperlinkContext good = link_with("Algebra", {});
  const HyperlinkContext empty = link_with("", {});
  const PageContent page = page_with("Algebra");
  PageContent blank;
  std::vector<VerifyInput> inputs = {{&good, &page}, {&empty, &page}, {&good, &blank}};
  const BatchOutcome out = batch_verify(model, provider, cache, std::span<const VerifyInput>(inputs));
  CHECK(out.results[0].verdict);
  CHECK(out.results[1].error_kind == "NoSourceFeatures");
  CHECK(out.results[2].error_kind == "NoTargetFeatures");
  CHECK_THROWS_AS(score_pair(model, provider, cache, empty, page), NoSourceFeatures);
  CHECK_THROWS_AS(score_pair(model, provider, cache, good, blank), NoTargetFeatures);

  FailingProvider failing;
  EmbeddingCache fresh;
  const BatchOutcome down = batch_verify(model, failing, fresh, std::span<const VerifyInput>(inputs));
  CHECK(down.results[0].error_kind == "ProviderFailure");
  CHECK(down.results[1].error_kind == "NoSourceFeatures");

  std::ostringstream ss;
  write_verdicts(ss, inputs, out.results);
  std::istringstream lines(ss.str());
  std::string line;
  std::vector<json> parsed;
  while (std::getline(lines, line)) parsed.push_back(json::parse(line));
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[0]["index"] == 0);
  CHECK(parsed[0]["source_url"] == "https://s.example/");
  CHECK(parsed[0]["target_url"] == "https://t.example/");
  CHECK(parsed[0].contains("decision"));
  CHECK(parsed[0]["matrix"].size() == 3);
  CHECK(parsed[1]["error"] == "NoSourceFeatures");

  const SiameseModel narrow = SiameseModel::initialize({64, 8, 8}, 0.1, 1);
  CHECK_THROWS_AS(batch_verify(narrow, provider, cache, std::span<const VerifyInput>(inputs)), DimensionMismatch);
}

TEST_CASE("verdict json") {
  const std::vector<FeatureText> src = {{"s", FeatureSource::SideText, 3}};
  const std::vector<FeatureText> tgt = {{"t", FeatureSource::PageTitle, 0}};
  const std::vector<double> raw = {0.5};
  const json j = to_json(aggregate(src, tgt, raw, 0.7));
  CHECK(j["decision"] == "irrelevant");
  CHECK(j["sources"][0]["source"] == "side_text");
  CHECK(j["sources"][0]["k"] == 3);
  CHECK(j["matrix"][0]["weight"] == doctest::Approx(0.7));
  CHECK(j["best"]["source"] == 0);
  ThroughputReport empty;
  CHECK(to_json(empty)["pairs_per_second"].is_null());
}
