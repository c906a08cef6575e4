#include "semlink/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <unordered_map>

#include "semlink/errors.hpp"
#include "semlink/kernels.hpp"
#include "semlink/text.hpp"

namespace semlink {

using nlohmann::json;

std::string_view to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::Anchor: return "anchor";
    case FeatureSource::ImageOcr: return "image_ocr";
    case FeatureSource::ImageAttr: return "image_attr";
    case FeatureSource::SideText: return "side_text";
    case FeatureSource::PageTitle: return "page_title";
    case FeatureSource::PageHeader: return "page_header";
    case FeatureSource::PageKeywords: return "page_keywords";
  }
  return "unknown";
}

std::string_view to_string(Decision d) { return d == Decision::Valid ? "valid" : "irrelevant"; }

double weight_of(FeatureSource source, int side_rank) {
  switch (source) {
    case FeatureSource::Anchor:
    case FeatureSource::ImageOcr:
    case FeatureSource::ImageAttr:
      return 1.0;
    case FeatureSource::SideText:
      // (10 - k) / 10 is the correctly rounded double of 1 - 0.1k.
      if (side_rank < 1) return 0.0;
      return side_rank >= 10 ? 0.0 : static_cast<double>(10 - side_rank) / 10.0;
    default:
      return 0.0;
  }
}

double weight_of(const FeatureText& f) { return weight_of(f.source, f.side_rank); }

std::vector<FeatureText> source_features(const HyperlinkContext& link, const SourceMask& mask) {
  std::vector<FeatureText> out;
  auto add = [&](const std::string& raw, FeatureSource src, int k) {
    std::string t = text::normalize_whitespace(raw);
    if (!t.empty()) out.push_back({std::move(t), src, k});
  };
  if (mask.anchor) add(link.anchor_text, FeatureSource::Anchor, 0);
  if (mask.image_text) {
    for (const auto& img : link.image_texts) {
      add(img.text, img.kind == ImageTextKind::Ocr ? FeatureSource::ImageOcr : FeatureSource::ImageAttr, 0);
    }
  }
  if (mask.side_text) {
    for (const auto& s : link.side_texts) add(s.text, FeatureSource::SideText, s.dom_distance);
  }
  return out;
}

std::vector<FeatureText> target_features(const PageContent& page) {
  std::vector<FeatureText> out;
  auto add = [&](const std::string& raw, FeatureSource src) {
    std::string t = text::normalize_whitespace(raw);
    if (!t.empty()) out.push_back({std::move(t), src, 0});
  };
  add(page.title, FeatureSource::PageTitle);
  const std::size_t headers = std::min(page.headers.size(), kMaxHeaderFeatures);
  for (std::size_t i = 0; i < headers; ++i) add(page.headers[i].text, FeatureSource::PageHeader);
  std::string joined;
  for (const auto& kw : page.keywords) {
    if (!joined.empty()) joined += ' ';
    joined += kw.term;
  }
  add(joined, FeatureSource::PageKeywords);
  return out;
}

Verdict aggregate(std::vector<FeatureText> sources, std::vector<FeatureText> targets,
                  std::span<const double> raw_scores, double threshold) {
  if (sources.empty()) throw NoSourceFeatures();
  if (targets.empty()) throw NoTargetFeatures();
  if (raw_scores.size() != sources.size() * targets.size()) {
    throw DimensionMismatch("score matrix size does not match the feature counts");
  }
  Verdict v;
  v.threshold = threshold;
  v.matrix.reserve(raw_scores.size());
  double best = -1.0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const double w = weight_of(sources[i]);
    for (std::size_t j = 0; j < targets.size(); ++j) {
      const double raw = raw_scores[i * targets.size() + j];
      MatrixEntry e{i, j, raw, w, raw * w};
      if (e.weighted > best) {
        best = e.weighted;
        v.best = v.matrix.size();
      }
      v.matrix.push_back(e);
    }
  }
  v.score = v.matrix[v.best].weighted;
  v.decision = v.score >= threshold ? Decision::Valid : Decision::Irrelevant;
  v.sources = std::move(sources);
  v.targets = std::move(targets);
  return v;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_between(Clock::time_point a, Clock::time_point b) {
  return std::chrono::duration<double>(b - a).count();
}

struct Prepared {
  std::vector<FeatureText> sources;
  std::vector<FeatureText> targets;
  std::vector<std::uint32_t> source_rows;
  std::vector<std::uint32_t> target_rows;
  std::size_t first_score = 0;
  bool ok = false;
};

void verify_chunk(const SiameseModel& model, EmbeddingProvider& provider, EmbeddingCache& cache,
                  std::span<const VerifyInput> pairs, const BatchOptions& options,
                  std::span<VerifyResult> results, ThroughputReport& report) {
  const auto t0 = Clock::now();
  std::vector<Prepared> prepared(pairs.size());
  std::vector<std::string> texts;
  std::unordered_map<std::string, std::uint32_t> row_of;
  auto row = [&](const std::string& t) {
    const auto [it, inserted] = row_of.try_emplace(t, static_cast<std::uint32_t>(texts.size()));
    if (inserted) texts.push_back(t);
    return it->second;
  };
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    Prepared& prep = prepared[p];
    prep.sources = source_features(*pairs[p].link, options.mask);
    prep.targets = target_features(*pairs[p].page);
    if (prep.sources.empty()) {
      results[p].error_kind = "NoSourceFeatures";
      results[p].error_detail = NoSourceFeatures().what();
      continue;
    }
    if (prep.targets.empty()) {
      results[p].error_kind = "NoTargetFeatures";
      results[p].error_detail = NoTargetFeatures().what();
      continue;
    }
    for (const auto& f : prep.sources) prep.source_rows.push_back(row(f.text));
    for (const auto& f : prep.targets) prep.target_rows.push_back(row(f.text));
    prep.ok = true;
  }

  std::vector<EmbeddingVector> embedded;
  try {
    embedded = cache.embed(provider, texts);
  } catch (const Error& e) {
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      if (!prepared[p].ok) continue;
      results[p].error_kind = "ProviderFailure";
      results[p].error_detail = e.what();
    }
    report.embed_seconds += seconds_between(t0, Clock::now());
    return;
  }
  const auto t1 = Clock::now();
  report.embed_seconds += seconds_between(t0, t1);

  const std::size_t dim_in = model.projection.in;
  const std::size_t dim_proj = model.projection.out;
  std::vector<double> x(texts.size() * dim_in);
  for (std::size_t r = 0; r < embedded.size(); ++r) {
    std::copy(embedded[r].values().begin(), embedded[r].values().end(), x.begin() + static_cast<std::ptrdiff_t>(r * dim_in));
  }
  std::vector<double> projected(texts.size() * dim_proj);
  std::vector<kernels::IndexPair> cells;
  for (auto& prep : prepared) {
    if (!prep.ok) continue;
    prep.first_score = cells.size();
    for (auto s : prep.source_rows) {
      for (auto t : prep.target_rows) cells.emplace_back(s, t);
    }
  }
  std::vector<double> scores(cells.size());
  if (options.parallel) {
    kernels::affine_rows_parallel(model.projection, x, projected);
    kernels::head_scores_parallel(model, projected, cells, scores);
  } else {
    kernels::affine_rows_serial(model.projection, x, projected);
    kernels::head_scores_serial(model, projected, cells, scores);
  }
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    Prepared& prep = prepared[p];
    if (!prep.ok) continue;
    const std::size_t n = prep.sources.size() * prep.targets.size();
    results[p].verdict = aggregate(std::move(prep.sources), std::move(prep.targets),
                                   std::span<const double>(scores).subspan(prep.first_score, n),
                                   options.threshold);
  }
  report.head_seconds += seconds_between(t1, Clock::now());
}

}  // namespace

BatchOutcome batch_verify(const SiameseModel& model, EmbeddingProvider& provider,
                          EmbeddingCache& cache, std::span<const VerifyInput> pairs,
                          const BatchOptions& options) {
  if (model.projection.in != provider.dim()) {
    throw DimensionMismatch("model expects " + std::to_string(model.projection.in) +
                            "-dimensional embeddings, provider yields " + std::to_string(provider.dim()));
  }
  BatchOutcome out;
  out.results.resize(pairs.size());
  out.report.pairs = pairs.size();
  const std::size_t chunk = std::max<std::size_t>(1, options.chunk_pairs);
  for (std::size_t i = 0; i < pairs.size(); i += chunk) {
    const std::size_t n = std::min(chunk, pairs.size() - i);
    verify_chunk(model, provider, cache, pairs.subspan(i, n), options,
                 std::span<VerifyResult>(out.results).subspan(i, n), out.report);
  }
  const double elapsed = out.report.embed_seconds + out.report.head_seconds;
  if (!pairs.empty() && elapsed > 0.0) {
    out.report.pairs_per_second = static_cast<double>(pairs.size()) / elapsed;
  }
  return out;
}

BatchOutcome batch_verify(const SiameseModel& model, EmbeddingProvider& provider,
                          EmbeddingCache& cache, std::span<const CorpusPair> pairs,
                          const BatchOptions& options) {
  std::vector<VerifyInput> inputs;
  inputs.reserve(pairs.size());
  for (const auto& p : pairs) inputs.push_back({&p.link, &p.page});
  return batch_verify(model, provider, cache, std::span<const VerifyInput>(inputs), options);
}

Verdict score_pair(const SiameseModel& model, EmbeddingProvider& provider, EmbeddingCache& cache,
                   const HyperlinkContext& link, const PageContent& page, double threshold,
                   const SourceMask& mask) {
  if (source_features(link, mask).empty()) throw NoSourceFeatures();
  if (target_features(page).empty()) throw NoTargetFeatures();
  const VerifyInput input{&link, &page};
  BatchOptions options;
  options.threshold = threshold;
  options.mask = mask;
  options.parallel = false;
  auto outcome = batch_verify(model, provider, cache, std::span<const VerifyInput>(&input, 1), options);
  VerifyResult& r = outcome.results.front();
  if (!r.verdict) throw Error(r.error_detail);
  return std::move(*r.verdict);
}

json to_json(const FeatureText& f) {
  json j{{"text", f.text}, {"source", to_string(f.source)}};
  if (f.source == FeatureSource::SideText) j["k"] = f.side_rank;
  return j;
}

json to_json(const Verdict& v) {
  json matrix = json::array();
  for (const auto& e : v.matrix) {
    matrix.push_back({{"source", e.source},
                      {"target", e.target},
                      {"raw", e.raw},
                      {"weight", e.weight},
                      {"weighted", e.weighted}});
  }
  json sources = json::array(), targets = json::array();
  for (const auto& f : v.sources) sources.push_back(to_json(f));
  for (const auto& f : v.targets) targets.push_back(to_json(f));
  const MatrixEntry& best = v.matrix.at(v.best);
  return {{"score", v.score},
          {"decision", to_string(v.decision)},
          {"threshold", v.threshold},
          {"best", {{"source", best.source}, {"target", best.target}}},
          {"sources", std::move(sources)},
          {"targets", std::move(targets)},
          {"matrix", std::move(matrix)}};
}

json verdict_line(std::size_t index, const VerifyInput& pair, const VerifyResult& result) {
  json line{{"index", index},
            {"source_url", pair.link ? pair.link->source_url : std::string()},
            {"target_url", pair.page ? pair.page->target_url : std::string()}};
  if (result.verdict) {
    line.update(to_json(*result.verdict));
  } else {
    line["error"] = result.error_kind;
    line["detail"] = result.error_detail;
  }
  return line;
}

void write_verdicts(std::ostream& out, std::span<const VerifyInput> pairs,
                    std::span<const VerifyResult> results) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << verdict_line(i, pairs[i], results[i]).dump() << '\n';
  }
}

json to_json(const ThroughputReport& r) {
  json j{{"pairs", r.pairs}, {"embed_seconds", r.embed_seconds}, {"head_seconds", r.head_seconds}};
  j["pairs_per_second"] = r.pairs_per_second ? json(*r.pairs_per_second) : json(nullptr);
  return j;
}

}  // namespace semlink
