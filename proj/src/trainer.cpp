#include "semlink/trainer.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "semlink/errors.hpp"
#include "semlink/eval.hpp"
#include "semlink/oracle.hpp"
#include "semlink/page_content.hpp"
#include "semlink/rng.hpp"
#include "semlink/siamese.hpp"
#include "semlink/url.hpp"

namespace semlink {

using nlohmann::json;

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(lr_decay_factor > 0.0)) throw std::invalid_argument("lr_decay_factor must be positive");
  if (lr_decay_every < 1) throw std::invalid_argument("lr_decay_every must be at least 1");
  if (lambda_triplet < 0.0 || lambda_bce < 0.0) throw std::invalid_argument("loss weights must be non-negative");
  if (lambda_triplet == 0.0 && lambda_bce == 0.0) throw std::invalid_argument("loss weights are both zero");
  if (!(triplet_margin > 0.0)) throw std::invalid_argument("triplet_margin must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be at least 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw std::invalid_argument("dropout_rate must be in [0, 1)");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw std::invalid_argument("threshold must be in [0, 1]");
}

json TrainConfig::fingerprint() const {
  return {{"epochs", epochs},
          {"learning_rate", learning_rate},
          {"lr_decay_factor", lr_decay_factor},
          {"lr_decay_every", lr_decay_every},
          {"lambda_triplet", lambda_triplet},
          {"lambda_bce", lambda_bce},
          {"triplet_margin", triplet_margin},
          {"batch_size", batch_size},
          {"seed", seed},
          {"dropout_rate", dropout_rate},
          {"threshold", threshold}};
}

double learning_rate_at(const TrainConfig& config, int epoch) {
  const int decays = (std::max(epoch, 1) - 1) / config.lr_decay_every;
  return config.learning_rate * std::pow(config.lr_decay_factor, decays);
}

namespace {

struct Example {
  const CorpusPair* pair = nullptr;
  std::string domain;
  std::unordered_set<std::string> anchor_tokens;
  std::unordered_set<std::string> title_tokens;
  std::vector<std::uint32_t> source_rows;
  std::vector<std::uint32_t> target_rows;
};

std::unordered_set<std::string> token_set(const std::string& s) {
  const auto toks = content_tokens(s);
  return {toks.begin(), toks.end()};
}

bool shares_token(const std::unordered_set<std::string>& a, const std::unordered_set<std::string>& b) {
  for (const auto& t : a) {
    if (b.contains(t)) return true;
  }
  return false;
}

// Embeddings of every feature text, addressed by row.
class TextTable {
 public:
  std::uint32_t row(const std::string& text) {
    const auto [it, inserted] = index_.try_emplace(text, static_cast<std::uint32_t>(texts_.size()));
    if (inserted) texts_.push_back(text);
    return it->second;
  }

  void embed(EmbeddingProvider& provider, EmbeddingCache& cache) {
    static constexpr std::size_t kChunk = 256;
    for (std::size_t i = vectors_.size(); i < texts_.size(); i += kChunk) {
      const std::vector<std::string> chunk(
          texts_.begin() + static_cast<std::ptrdiff_t>(i),
          texts_.begin() + static_cast<std::ptrdiff_t>(std::min(texts_.size(), i + kChunk)));
      for (auto& v : cache.embed(provider, chunk)) {
        vectors_.emplace_back(v.values().begin(), v.values().end());
      }
    }
  }

  std::span<const double> vector(std::uint32_t row) const { return vectors_[row]; }

 private:
  std::unordered_map<std::string, std::uint32_t> index_;
  std::vector<std::string> texts_;
  std::vector<std::vector<double>> vectors_;
};

// A page from another source domain whose title shares no content token with
// the anchor; falls back to any other-domain page, then any other page.
std::optional<std::size_t> draw_negative(const std::vector<Example>& pool, const Example& positive,
                                         Rng& rng) {
  static constexpr int kRandomTries = 32;
  const std::size_t n = pool.size();
  if (n < 2) return std::nullopt;
  auto acceptable = [&](const Example& e) {
    return e.domain != positive.domain && !shares_token(positive.anchor_tokens, e.title_tokens);
  };
  for (int t = 0; t < kRandomTries; ++t) {
    const std::size_t c = static_cast<std::size_t>(rng.below(n));
    if (acceptable(pool[c])) return c;
  }
  const std::size_t start = static_cast<std::size_t>(rng.below(n));
  for (std::size_t k = 0; k < n; ++k) {
    if (acceptable(pool[(start + k) % n])) return (start + k) % n;
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (pool[(start + k) % n].domain != positive.domain) return (start + k) % n;
  }
  for (std::size_t k = 0; k < n; ++k) {
    const Example& e = pool[(start + k) % n];
    if (e.pair->page.target_url != positive.pair->page.target_url) return (start + k) % n;
  }
  return std::nullopt;
}

Example make_example(const CorpusPair& pair, TextTable& table) {
  Example e;
  e.pair = &pair;
  e.domain = url_host(pair.link.source_url);
  e.anchor_tokens = token_set(pair.link.anchor_text);
  e.title_tokens = token_set(pair.page.title);
  for (const auto& f : source_features(pair.link)) e.source_rows.push_back(table.row(f.text));
  for (const auto& f : target_features(pair.page)) e.target_rows.push_back(table.row(f.text));
  return e;
}

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[static_cast<std::size_t>(rng.below(v.size()))];
}

}  // namespace

TrainResult train(const CorpusSplit& corpus, EmbeddingProvider& provider, const TrainConfig& config,
                  EmbeddingCache* cache, const EpochObserver& observer) {
  config.validate();
  if (config.shape.dim_in != provider.dim()) {
    throw DimensionMismatch("model input width " + std::to_string(config.shape.dim_in) +
                            " differs from provider dimension " + std::to_string(provider.dim()));
  }
  EmbeddingCache local_cache;
  EmbeddingCache& emb_cache = cache ? *cache : local_cache;

  TextTable table;
  std::vector<Example> pool;
  for (const auto& pair : corpus.train) {
    if (pair.label == Label::Negative) continue;
    Example e = make_example(pair, table);
    if (e.source_rows.empty() || e.target_rows.empty()) continue;
    pool.push_back(std::move(e));
  }
  if (pool.empty()) throw EmptyTrainSet();

  TrainResult result;
  result.positives = pool.size();
  result.model = SiameseModel::initialize(config.shape, config.dropout_rate, config.seed);

  // Validation set: labeled pairs as given, plus one synthesized negative per
  // positive, fixed for the whole run.
  std::vector<CorpusPair> validation;
  {
    Rng vrng(config.seed ^ 0x5bd1e9955bd1e995ULL);
    std::vector<Example> vpool;
    // vpool points into `validation`, which must not reallocate below.
    validation.reserve(2 * corpus.validation.size());
    for (const auto& pair : corpus.validation) {
      CorpusPair p = pair;
      if (p.label == Label::Unlabeled) p.label = Label::Positive;
      if (source_features(p.link).empty() || target_features(p.page).empty()) continue;
      validation.push_back(std::move(p));
    }
    TextTable scratch;
    for (const auto& p : validation) {
      if (p.label == Label::Positive) vpool.push_back(make_example(p, scratch));
    }
    for (const auto& e : pool) vpool.push_back(e);
    const std::size_t positives = validation.size();
    for (std::size_t i = 0; i < positives; ++i) {
      if (validation[i].label != Label::Positive) continue;
      const Example probe = make_example(validation[i], scratch);
      if (const auto neg = draw_negative(vpool, probe, vrng)) {
        CorpusPair n;
        n.link = validation[i].link;
        n.page = vpool[*neg].pair->page;
        n.label = Label::Negative;
        validation.push_back(std::move(n));
      }
    }
  }

  table.embed(provider, emb_cache);

  const LossWeights weights{config.lambda_triplet, config.lambda_bce, config.triplet_margin};
  AdamState adam = AdamState::for_model(result.model);
  SiameseModel grads = SiameseModel::zeros(config.shape, config.dropout_rate);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(pool.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  std::vector<TrainingTriplet> triplets;
  std::vector<TripletMasks> masks;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = learning_rate_at(config, epoch);
    rng.shuffle(order);
    triplets.clear();
    for (const std::size_t i : order) {
      const Example& pos = pool[i];
      const auto neg = draw_negative(pool, pos, rng);
      if (!neg) {
        if (epoch == 1) ++result.skipped_no_negative;
        continue;
      }
      triplets.push_back({table.vector(pick(pos.source_rows, rng)),
                          table.vector(pick(pos.target_rows, rng)),
                          table.vector(pick(pool[*neg].target_rows, rng))});
    }

    double loss_sum = 0.0;
    for (std::size_t b = 0; b < triplets.size(); b += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t n = std::min(triplets.size() - b, static_cast<std::size_t>(config.batch_size));
      const std::span<const TrainingTriplet> batch(triplets.data() + b, n);
      masks.clear();
      if (result.model.dropout_rate > 0.0) {
        for (std::size_t k = 0; k < n; ++k) {
          TripletMasks m;
          m.positive = draw_dropout_masks(result.model, rng);
          m.negative = draw_dropout_masks(result.model, rng);
          masks.push_back(std::move(m));
        }
      }
      const double loss = loss_and_gradients(result.model, batch, weights, masks, grads);
      loss_sum += loss * static_cast<double>(n);
      adam_step(result.model, grads, adam, lr);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = lr;
    rec.triplets = triplets.size();
    rec.mean_loss = triplets.empty() ? 0.0 : loss_sum / static_cast<double>(triplets.size());
    if (!validation.empty()) {
      const EvalReport report =
          evaluate(result.model, provider, emb_cache, validation, config.threshold, AblationConfig{});
      rec.validation_f1 = report.metrics.f1;
    }
    result.history.push_back(rec);
    if (observer) observer(rec);
  }

  json fp = config.fingerprint();
  fp["provider"] = provider.descriptor().key();
  fp["train_pairs"] = corpus.train.size();
  fp["validation_pairs"] = corpus.validation.size();
  fp["split_seed"] = corpus.seed;
  result.model.train_fingerprint = std::move(fp);
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,learning_rate,mean_loss,triplets,validation_f1\n";
  for (const auto& r : history) {
    json lr = r.learning_rate, loss = r.mean_loss;
    out << r.epoch << ',' << lr.dump() << ',' << loss.dump() << ',' << r.triplets << ',';
    if (r.validation_f1) out << json(*r.validation_f1).dump();
    out << '\n';
  }
}

void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoFailure("cannot write history " + path.string());
  write_history_csv(out, history);
  if (!out) throw IoFailure("failed writing history " + path.string());
}

}  // namespace semlink
