#include <doctest.h>

#include <sstream>

#include "semlink/errors.hpp"
#include "semlink/eval.hpp"
#include "semlink/trainer.hpp"
#include "synthetic.hpp"

using namespace semlink;

namespace {

class NarrowProvider final : public EmbeddingProvider {
 public:
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override {
    return std::vector<EmbeddingVector>(texts.size(), EmbeddingVector(std::vector<double>(16, 0.25)));
  }
  ProviderDescriptor descriptor() const override { return {"narrow", "v1"}; }
  std::size_t dim() const override { return 16; }
};

TrainConfig small_config(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.shape = {512, 32, 32};
  c.learning_rate = 5e-3;
  c.batch_size = 16;
  return c;
}

CorpusSplit small_split() {
  return split_corpus(testing::synthetic_corpus({3, 20, 0.2, 0.1, 11}), 0.85, 3);
}

}  // namespace

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  CHECK(learning_rate_at(c, 1) == 1e-3);
  CHECK(learning_rate_at(c, 50) == 1e-3);
  CHECK(learning_rate_at(c, 51) == doctest::Approx(8e-4).epsilon(1e-14));
  CHECK(learning_rate_at(c, 101) == doctest::Approx(6.4e-4).epsilon(1e-14));
  CHECK(learning_rate_at(c, 200) == doctest::Approx(5.12e-4).epsilon(1e-14));
}

TEST_CASE("config validation") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  auto bad = [&](auto mutate) {
    TrainConfig x;
    mutate(x);
    CHECK_THROWS_AS(x.validate(), std::invalid_argument);
  };
  bad([](TrainConfig& x) { x.epochs = 0; });
  bad([](TrainConfig& x) { x.learning_rate = 0; });
  bad([](TrainConfig& x) { x.lambda_bce = 0; });
  bad([](TrainConfig& x) { x.lambda_triplet = -1; });
  bad([](TrainConfig& x) { x.batch_size = 0; });
  bad([](TrainConfig& x) { x.dropout_rate = 1.0; });
  bad([](TrainConfig& x) { x.threshold = 1.5; });
}

TEST_CASE("training is deterministic and records history") {
  const CorpusSplit split = small_split();
  HashEmbedder provider;
  std::vector<int> seen;
  const TrainResult a = train(split, provider, small_config(6), nullptr,
                              [&](const EpochRecord& r) { seen.push_back(r.epoch); });
  const TrainResult b = train(split, provider, small_config(6));
  CHECK(a.model == b.model);
  CHECK(seen == std::vector<int>{1, 2, 3, 4, 5, 6});
  REQUIRE(a.history.size() == 6);
  CHECK(a.history[0].triplets == a.positives);
  TrainConfig accept_all = small_config(1);
  accept_all.threshold = 0.0;
  CHECK(train(split, provider, accept_all).history[0].validation_f1 == doctest::Approx(2.0 / 3.0));
  CHECK(a.model.train_fingerprint["provider"] == "hash/semlink-hash-v1");

  TrainConfig other = small_config(6);
  other.seed = 43;
  CHECK_FALSE(train(split, provider, other).model == a.model);

  std::ostringstream csv;
  write_history_csv(csv, a.history);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  CHECK(line == "epoch,learning_rate,mean_loss,triplets,validation_f1");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    CHECK(line.rfind(std::to_string(rows) + ",", 0) == 0);
  }
  CHECK(rows == 6);
}

TEST_CASE("training lowers the loss and separates topics") {
  const CorpusSplit split = small_split();
  HashEmbedder provider;
  const TrainResult r = train(split, provider, small_config(40));
  CHECK(r.history.back().mean_loss < r.history.front().mean_loss);

  EmbeddingCache cache;
  const auto labeled = testing::with_cross_topic_negatives(split.validation, 5);
  const EvalReport report = evaluate(r.model, provider, cache, labeled, 0.7, {});
  REQUIRE(report.metrics.f1);
  CHECK(*report.metrics.f1 > 0.8);
}

TEST_CASE("training failures") {
  HashEmbedder provider;
  CorpusSplit negatives_only = small_split();
  for (auto& p : negatives_only.train) p.label = Label::Negative;
  CHECK_THROWS_AS(train(negatives_only, provider, small_config(1)), EmptyTrainSet);

  NarrowProvider narrow;
  CHECK_THROWS_AS(train(small_split(), narrow, small_config(1)), DimensionMismatch);

  TrainConfig bad = small_config(1);
  bad.batch_size = 0;
  CHECK_THROWS_AS(train(small_split(), provider, bad), std::invalid_argument);
}
