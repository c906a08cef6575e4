#include "semlink/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <memory>
#include <unordered_map>

#include "semlink/corpus.hpp"
#include "semlink/embed_server.hpp"
#include "semlink/embedding.hpp"
#include "semlink/errors.hpp"
#include "semlink/eval.hpp"
#include "semlink/harvest.hpp"
#include "semlink/html.hpp"
#include "semlink/oracle.hpp"
#include "semlink/page_content.hpp"
#include "semlink/siamese.hpp"
#include "semlink/trainer.hpp"
#include "semlink/url.hpp"

namespace semlink {

using nlohmann::json;

namespace {

// Thrown for bad flag combinations discovered after parsing.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GlobalOptions {
  std::string embed_backend = "hash";
  std::string embed_endpoint;
  std::uint64_t seed = 42;
  double threshold = kDefaultThreshold;
  bool pretty = false;
};

struct CrawlOptions {
  std::string seeds;
  std::string out;
  std::size_t max_links = 500;
  int parallelism = 4;
  double timeout = 10.0;
  bool no_robots = false;
  std::string rendered_dir;
  double host_interval = 1.0;
  int side_texts = kDefaultSideTexts;
};

struct TrainOptions {
  std::string corpus;
  std::string out;
  std::string history;
  double split_ratio = 0.85;
  TrainConfig config;
};

struct VerifyOptions {
  std::string model;
  std::string corpus;
  std::string url;
  std::string report;
  double timeout = 10.0;
  bool no_robots = false;
  double host_interval = 1.0;
  int side_texts = kDefaultSideTexts;
};

struct EvalOptions {
  std::string model;
  std::string corpus;
  std::string report;
  bool no_side_text = false;
  bool no_image_text = false;
  bool anchor_only = false;
  std::optional<double> min_f1;
};

struct BaselineOptions {
  std::string corpus;
  std::string report;
  std::string endpoint;
  std::string model;
  int rating_threshold = 4;
  int concurrency = 1;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8088;
  std::size_t max_batch = kMaxRemoteBatch;
};

class Output {
 public:
  Output(std::ostream& out, bool pretty) : out_(out), pretty_(pretty) {}
  void emit(const json& j) { out_ << j.dump(pretty_ ? 2 : -1) << '\n'; }

 private:
  std::ostream& out_;
  bool pretty_;
};

std::unique_ptr<EmbeddingProvider> make_provider(const GlobalOptions& g) {
  if (g.embed_backend == "hash") return std::make_unique<HashEmbedder>();
  std::string endpoint = g.embed_endpoint;
  if (endpoint.empty()) {
    if (const char* env = std::getenv("SEMLINK_EMBED_ENDPOINT")) endpoint = env;
  }
  if (endpoint.empty()) {
    throw UsageError("--embed-backend remote needs --embed-endpoint or SEMLINK_EMBED_ENDPOINT");
  }
  RemoteEmbedConfig config;
  config.endpoint = endpoint;
  return std::make_unique<RemoteEmbedder>(config);
}

void open_for_write(std::ofstream& f, const std::string& path) {
  f.open(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoFailure("cannot write " + path);
}

json metrics_report(const ConfusionCounts& counts, const Metrics& metrics, json config) {
  return {{"counts", to_json(counts)}, {"metrics", to_json(metrics)}, {"config", std::move(config)}};
}

int cmd_crawl(const GlobalOptions& g, const CrawlOptions& o, Output& out, std::ostream& err) {
  FetchPolicy policy;
  policy.max_links_per_seed = o.max_links;
  policy.parallelism = o.parallelism;
  policy.timeout_s = o.timeout;
  policy.respect_robots = !o.no_robots;
  policy.per_host_interval_s = o.host_interval;
  if (!o.rendered_dir.empty()) policy.rendered_html_dir = o.rendered_dir;
  try {
    policy.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  (void)g;
  const SeedList seeds = SeedList::load(o.seeds);
  HarvestOptions options;
  options.side_texts = o.side_texts;
  const HarvestStats stats = harvest_all(seeds, policy, o.out, options);
  if (stats.pairs == 0) err << "warning: crawl produced no pairs\n";
  json j = stats.to_json();
  j["out"] = o.out;
  out.emit(j);
  return kExitOk;
}

int cmd_train(const GlobalOptions& g, TrainOptions o, Output& out, std::ostream& err) {
  o.config.seed = g.seed;
  o.config.threshold = g.threshold;
  try {
    o.config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto provider = make_provider(g);
  auto pairs = read_corpus(o.corpus);
  const CorpusSplit split = split_corpus(std::move(pairs), o.split_ratio, g.seed);
  if (split.warning) err << "warning: " << *split.warning << '\n';
  const TrainResult result = train(split, *provider, o.config);
  save_model(result.model, o.out);
  const std::string history = o.history.empty() ? o.out + ".history.csv" : o.history;
  write_history_csv(std::filesystem::path(history), result.history);

  json j{{"model", o.out},
         {"history", history},
         {"train_pairs", split.train.size()},
         {"validation_pairs", split.validation.size()},
         {"positives", result.positives},
         {"epochs", o.config.epochs},
         {"parameters", result.model.parameter_count()}};
  if (!result.history.empty()) {
    const EpochRecord& last = result.history.back();
    j["final_loss"] = last.mean_loss;
    j["final_validation_f1"] = last.validation_f1 ? json(*last.validation_f1) : json(nullptr);
  }
  out.emit(j);
  return kExitOk;
}

struct LivePairs {
  std::vector<HyperlinkContext> links;
  std::vector<PageContent> pages;
  std::vector<std::string> failures;  // empty when the target was fetched with 200
};

LivePairs collect_live_pairs(const VerifyOptions& o, std::ostream& err) {
  FetchPolicy policy;
  policy.timeout_s = o.timeout;
  policy.respect_robots = !o.no_robots;
  policy.per_host_interval_s = o.host_interval;
  Fetcher fetcher(policy);
  const FetchResult page = fetcher.fetch(o.url);
  if (page.status != 200) throw Error("page " + o.url + " returned HTTP " + std::to_string(page.status));
  const html::Document doc = html::parse_html(page.body);

  LivePairs live;
  struct Target {
    std::optional<PageContent> page;
    std::string failure;
  };
  std::unordered_map<std::string, Target> targets;
  for (const auto& anchor : discover_anchors(doc, page.final_url)) {
    if (filter_navigational(anchor)) continue;
    const std::string& url = *anchor.resolved_url;
    const std::string scheme = href_scheme(url);
    if (scheme != "http" && scheme != "https") continue;
    auto it = targets.find(url);
    if (it == targets.end()) {
      Target t;
      try {
        const FetchResult r = fetcher.fetch(url);
        if (r.status == 200) {
          t.page = build_page_content(r.body, url, 200);
          if (r.final_url != url) t.page->final_url = r.final_url;
        } else {
          t.failure = "target returned HTTP " + std::to_string(r.status);
        }
      } catch (const Error& e) {
        t.failure = e.what();
      }
      if (!t.failure.empty()) err << "warning: " << url << ": " << t.failure << '\n';
      it = targets.emplace(url, std::move(t)).first;
    }
    live.links.push_back(build_hyperlink_context(doc, anchor, page.final_url, o.side_texts));
    if (it->second.page) {
      live.pages.push_back(*it->second.page);
    } else {
      PageContent stub;
      stub.target_url = url;
      live.pages.push_back(std::move(stub));
    }
    live.failures.push_back(it->second.failure);
  }
  return live;
}

int cmd_verify(const GlobalOptions& g, const VerifyOptions& o, Output& out, std::ostream& err) {
  if (o.corpus.empty() == o.url.empty()) throw UsageError("verify needs exactly one of --corpus or --url");
  auto provider = make_provider(g);
  const SiameseModel model = load_model(o.model);
  EmbeddingCache cache;
  BatchOptions options;
  options.threshold = g.threshold;

  std::vector<CorpusPair> corpus;
  LivePairs live;
  std::vector<VerifyInput> inputs;
  std::vector<VerifyResult> results;
  ThroughputReport throughput;
  if (!o.corpus.empty()) {
    corpus = read_corpus(o.corpus);
    for (const auto& p : corpus) inputs.push_back({&p.link, &p.page});
    BatchOutcome outcome = batch_verify(model, *provider, cache, std::span<const VerifyInput>(inputs), options);
    results = std::move(outcome.results);
    throughput = outcome.report;
  } else {
    live = collect_live_pairs(o, err);
    std::vector<VerifyInput> fetched;
    std::vector<std::size_t> fetched_index;
    for (std::size_t i = 0; i < live.links.size(); ++i) {
      inputs.push_back({&live.links[i], &live.pages[i]});
      if (live.failures[i].empty()) {
        fetched.push_back(inputs.back());
        fetched_index.push_back(i);
      }
    }
    results.resize(inputs.size());
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      if (!live.failures[i].empty()) {
        results[i].error_kind = "TargetUnavailable";
        results[i].error_detail = live.failures[i];
      }
    }
    BatchOutcome outcome = batch_verify(model, *provider, cache, std::span<const VerifyInput>(fetched), options);
    for (std::size_t k = 0; k < fetched_index.size(); ++k) results[fetched_index[k]] = std::move(outcome.results[k]);
    throughput = outcome.report;
  }

  std::size_t valid = 0, irrelevant = 0, errors = 0;
  for (const auto& r : results) {
    if (!r.verdict) {
      ++errors;
    } else if (r.verdict->decision == Decision::Valid) {
      ++valid;
    } else {
      ++irrelevant;
    }
  }
  json summary{{"pairs", results.size()},
               {"valid", valid},
               {"irrelevant", irrelevant},
               {"errors", errors},
               {"threshold", g.threshold},
               {"throughput", to_json(throughput)}};
  if (!o.report.empty()) {
    std::ofstream f;
    open_for_write(f, o.report);
    write_verdicts(f, inputs, results);
    if (!f) throw IoFailure("failed writing " + o.report);
    summary["report"] = o.report;
  } else {
    json lines = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) lines.push_back(verdict_line(i, inputs[i], results[i]));
    summary["verdicts"] = std::move(lines);
  }
  out.emit(summary);
  return irrelevant > 0 ? kExitFindings : kExitOk;
}

int cmd_eval(const GlobalOptions& g, const EvalOptions& o, Output& out) {
  AblationConfig ablation;
  if (o.anchor_only) ablation = AblationConfig::anchor_only();
  if (o.no_side_text) ablation.use_side_text = false;
  if (o.no_image_text) ablation.use_image_text = false;
  try {
    ablation.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  auto provider = make_provider(g);
  const SiameseModel model = load_model(o.model);
  const auto pairs = read_corpus(o.corpus);
  EmbeddingCache cache;
  const EvalReport report = evaluate(model, *provider, cache, pairs, g.threshold, ablation);
  if (!o.report.empty()) {
    std::ofstream f;
    open_for_write(f, o.report);
    write_eval_verdicts(f, pairs, report);
  }
  json config{{"threshold", g.threshold},
              {"use_anchor", ablation.use_anchor},
              {"use_side_text", ablation.use_side_text},
              {"use_image_text", ablation.use_image_text},
              {"embed_backend", provider->descriptor().key()},
              {"pairs", pairs.size()}};
  json j = metrics_report(report.counts, report.metrics, std::move(config));
  j["featureless"] = report.featureless;
  j["throughput"] = to_json(report.outcome.report);
  out.emit(j);
  if (o.min_f1 && (!report.metrics.f1 || *report.metrics.f1 < *o.min_f1)) return kExitFindings;
  return kExitOk;
}

int cmd_baseline(const GlobalOptions& g, const BaselineOptions& o, Output& out) {
  LlmConfig config = LlmConfig::from_env();
  if (!o.endpoint.empty()) config.endpoint = o.endpoint;
  if (!o.model.empty()) config.model = o.model;
  config.rating_threshold = o.rating_threshold;
  config.concurrency = o.concurrency;
  try {
    config.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  (void)g;
  const auto pairs = read_corpus(o.corpus);
  const BaselineReport report = llm_baseline_evaluate(config, pairs);
  if (!o.report.empty()) {
    std::ofstream f;
    open_for_write(f, o.report);
    for (std::size_t i = 0; i < report.pairs.size(); ++i) {
      const auto& r = report.pairs[i];
      json line{{"index", i},
                {"label", to_string(pairs[i].label)},
                {"status", r.status == BaselineStatus::Rated ? "rated"
                           : r.status == BaselineStatus::ParseFailure ? "parse_failure"
                                                                      : "gap"},
                {"rating", r.rating ? json(*r.rating) : json(nullptr)},
                {"raw_reply", r.raw_reply},
                {"latency_s", r.latency_s}};
      if (!r.error.empty()) line["error"] = r.error;
      f << line.dump() << '\n';
    }
  }
  json cfg{{"endpoint", config.endpoint},
           {"model", config.model},
           {"rating_threshold", config.rating_threshold},
           {"concurrency", config.concurrency},
           {"pairs", pairs.size()}};
  json j = metrics_report(report.counts, report.metrics, std::move(cfg));
  j["parse_failures"] = report.parse_failures;
  j["gaps"] = report.gaps;
  j["latency"] = to_json(report.latency);
  out.emit(j);
  return kExitOk;
}

int cmd_audit(const GlobalOptions& g, const std::string& corpus, Output& out) {
  auto provider = make_provider(g);
  const auto pairs = read_corpus(corpus);
  const AuditReport report = base_similarity_audit(pairs, *provider);
  json j = report.to_json();
  j["embed_backend"] = provider->descriptor().key();
  out.emit(j);
  return kExitOk;
}

int cmd_serve(const ServeOptions& o, std::ostream& err) {
  MockEmbedServer server(o.max_batch);
  err << "serving /embed and /health on " << o.host << ':' << o.port << '\n';
  if (!server.listen_blocking(o.host, o.port)) throw Error("cannot listen on " + o.host + ":" + std::to_string(o.port));
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Semantic hyperlink checker: crawl, train, verify and evaluate.", "semlink"};
  app.fallthrough();
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--embed-backend", g.embed_backend, "Embedding backend")
      ->check(CLI::IsMember({"hash", "remote"}))
      ->capture_default_str();
  app.add_option("--embed-endpoint", g.embed_endpoint, "Base URL of the /embed service (remote backend)");
  app.add_option("--seed", g.seed, "Seed for splitting, initialization and sampling")->capture_default_str();
  app.add_option("--threshold", g.threshold, "Decision threshold tau")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  app.add_flag("--pretty", g.pretty, "Indent JSON output");

  CrawlOptions crawl;
  auto* c = app.add_subcommand("crawl", "Harvest positive pairs from seed pages");
  c->add_option("--seeds", crawl.seeds, "Seed list file")->required()->check(CLI::ExistingFile);
  c->add_option("--out", crawl.out, "Corpus file to write")->required();
  c->add_option("--max-links", crawl.max_links, "Anchors considered per seed")->capture_default_str();
  c->add_option("--parallelism", crawl.parallelism, "Seed workers")->capture_default_str();
  c->add_option("--timeout", crawl.timeout, "Per-request timeout in seconds")->capture_default_str();
  c->add_flag("--no-robots", crawl.no_robots, "Ignore robots.txt");
  c->add_option("--rendered-html-dir", crawl.rendered_dir, "Directory of pre-rendered HTML dumps")
      ->check(CLI::ExistingDirectory);
  c->add_option("--host-interval", crawl.host_interval, "Minimum seconds between requests to one host")
      ->capture_default_str();
  c->add_option("--side-texts", crawl.side_texts, "Side-text snippets per link")
      ->check(CLI::Range(0, 5))
      ->capture_default_str();

  TrainOptions train_opts;
  auto* t = app.add_subcommand("train", "Train the Siamese head on a corpus");
  t->add_option("--corpus", train_opts.corpus, "Corpus file")->required()->check(CLI::ExistingFile);
  t->add_option("--out", train_opts.out, "Checkpoint to write")->required();
  t->add_option("--history", train_opts.history, "Per-epoch CSV (default: <out>.history.csv)");
  t->add_option("--split-ratio", train_opts.split_ratio, "Training fraction")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  t->add_option("--epochs", train_opts.config.epochs)->capture_default_str();
  t->add_option("--lr", train_opts.config.learning_rate)->capture_default_str();
  t->add_option("--lr-decay", train_opts.config.lr_decay_factor)->capture_default_str();
  t->add_option("--lr-decay-every", train_opts.config.lr_decay_every)->capture_default_str();
  t->add_option("--lambda-triplet", train_opts.config.lambda_triplet)->capture_default_str();
  t->add_option("--lambda-bce", train_opts.config.lambda_bce)->capture_default_str();
  t->add_option("--margin", train_opts.config.triplet_margin)->capture_default_str();
  t->add_option("--batch-size", train_opts.config.batch_size)->capture_default_str();
  t->add_option("--dropout", train_opts.config.dropout_rate)->capture_default_str();

  VerifyOptions verify;
  auto* v = app.add_subcommand("verify", "Score links of a live page or a corpus file");
  v->add_option("--model", verify.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  v->add_option("--corpus", verify.corpus, "Corpus file to score")->check(CLI::ExistingFile);
  v->add_option("--url", verify.url, "Page whose links are checked");
  v->add_option("--report", verify.report, "Verdict JSON-lines file");
  v->add_option("--timeout", verify.timeout)->capture_default_str();
  v->add_flag("--no-robots", verify.no_robots, "Ignore robots.txt");
  v->add_option("--host-interval", verify.host_interval)->capture_default_str();
  v->add_option("--side-texts", verify.side_texts)->check(CLI::Range(0, 5))->capture_default_str();

  EvalOptions eval;
  double min_f1 = -1.0;
  auto* e = app.add_subcommand("eval", "Metrics of the oracle on a labeled corpus");
  e->add_option("--model", eval.model, "Checkpoint")->required()->check(CLI::ExistingFile);
  e->add_option("--corpus", eval.corpus, "Labeled corpus")->required()->check(CLI::ExistingFile);
  e->add_option("--report", eval.report, "Verdict JSON-lines file");
  e->add_flag("--no-side-text", eval.no_side_text);
  e->add_flag("--no-image-text", eval.no_image_text);
  e->add_flag("--anchor-only", eval.anchor_only);
  auto* min_f1_opt = e->add_option("--min-f1", min_f1, "Exit 1 when F1 is below this")->check(CLI::Range(0.0, 1.0));

  BaselineOptions baseline;
  auto* b = app.add_subcommand("baseline", "Evaluate an LLM through a chat-completion endpoint");
  b->add_option("--corpus", baseline.corpus, "Labeled corpus")->required()->check(CLI::ExistingFile);
  b->add_option("--report", baseline.report, "Per-pair JSON-lines file");
  b->add_option("--endpoint", baseline.endpoint, "Chat-completion URL (default: SEMLINK_LLM_ENDPOINT)");
  b->add_option("--llm-model", baseline.model, "Model name (default: SEMLINK_LLM_MODEL)");
  b->add_option("--rating-threshold", baseline.rating_threshold)->check(CLI::Range(2, 5))->capture_default_str();
  b->add_option("--concurrency", baseline.concurrency)->check(CLI::PositiveNumber)->capture_default_str();

  std::string audit_corpus;
  auto* a = app.add_subcommand("audit", "Anchor/title similarity histogram of a corpus");
  a->add_option("--corpus", audit_corpus, "Corpus file")->required()->check(CLI::ExistingFile);

  ServeOptions serve;
  auto* s = app.add_subcommand("serve-embed", "Serve the hash backend over the /embed protocol");
  s->add_option("--host", serve.host)->capture_default_str();
  s->add_option("--port", serve.port)->capture_default_str();
  s->add_option("--max-batch", serve.max_batch)->capture_default_str();

  std::vector<std::string> argv_store{"semlink"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& arg : argv_store) argv.push_back(arg.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (*min_f1_opt) eval.min_f1 = min_f1;

  Output output(out, g.pretty);
  try {
    if (*c) return cmd_crawl(g, crawl, output, err);
    if (*t) return cmd_train(g, train_opts, output, err);
    if (*v) return cmd_verify(g, verify, output, err);
    if (*e) return cmd_eval(g, eval, output);
    if (*b) return cmd_baseline(g, baseline, output);
    if (*a) return cmd_audit(g, audit_corpus, output);
    if (*s) return cmd_serve(serve, err);
  } catch (const UsageError& ex) {
    err << "usage error: " << ex.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace semlink
