#include "semlink/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <stdexcept>
#include <thread>

#include "semlink/errors.hpp"
#include "semlink/http_client.hpp"
#include "semlink/text.hpp"

namespace semlink {

using nlohmann::json;

Metrics compute_metrics(const ConfusionCounts& c) {
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.accuracy = ratio(c.tp + c.tn, c.total());
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  return m;
}

json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json to_json(const Metrics& m) {
  auto v = [](const std::optional<double>& x) { return x ? json(*x) : json("undefined"); };
  return {{"accuracy", v(m.accuracy)}, {"precision", v(m.precision)}, {"recall", v(m.recall)}, {"f1", v(m.f1)}};
}

void AblationConfig::validate() const {
  if (!use_anchor && !use_side_text && !use_image_text) {
    throw std::invalid_argument("ablation disables every source feature");
  }
}

EvalReport evaluate(const SiameseModel& model, EmbeddingProvider& provider, EmbeddingCache& cache,
                    const std::vector<CorpusPair>& pairs, double threshold,
                    const AblationConfig& ablation) {
  ablation.validate();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].label == Label::Unlabeled) {
      throw std::invalid_argument("pair " + std::to_string(i) + " is unlabeled");
    }
  }
  BatchOptions options;
  options.threshold = threshold;
  options.mask = ablation.mask();
  EvalReport report;
  report.outcome = batch_verify(model, provider, cache, std::span<const CorpusPair>(pairs), options);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const VerifyResult& r = report.outcome.results[i];
    if (!r.verdict && r.error_kind != "NoSourceFeatures") {
      throw Error("pair " + std::to_string(i) + " could not be scored: " + r.error_detail);
    }
    if (!r.verdict) ++report.featureless;
    const bool valid = r.verdict && r.verdict->decision == Decision::Valid;
    const bool positive = pairs[i].label == Label::Positive;
    if (positive) {
      ++(valid ? report.counts.tp : report.counts.fn);
    } else {
      ++(valid ? report.counts.fp : report.counts.tn);
    }
  }
  report.metrics = compute_metrics(report.counts);
  return report;
}

void write_eval_verdicts(std::ostream& out, const std::vector<CorpusPair>& pairs,
                         const EvalReport& report) {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    json line = verdict_line(i, {&pairs[i].link, &pairs[i].page}, report.outcome.results[i]);
    line["label"] = to_string(pairs[i].label);
    out << line.dump() << '\n';
  }
}

namespace {

constexpr std::string_view kPromptTemplate =
    "Assume you are a webpage visitor. You expect to see relevant webpage content when clicking on a hyperlink.\n"
    "---\n"
    "Your task is to determine the answer to the following question based on the rating criteria provided.\n"
    "Q: After a webpage visitor clicks on a hyperlink with \"Hyperlink Information,\" do they expect to view a "
    "webpage with \"Target Webpage Information\"?\n"
    "--- Rating Criteria ---\n"
    "1 - Definitely not\n"
    "2 - Probably not\n"
    "3 - Might or might not\n"
    "4 - Probably yes\n"
    "5 - Definitely yes\n"
    "---\n"
    "\"Hyperlink Information\":\n"
    "{link_info}\n"
    "---\n"
    "\"Target Webpage Information\":\n"
    "{webpage_info}\n"
    "---\n"
    "Just give me a rating and do not reply with anything else. Your reply should only be in the following "
    "format:\n"
    "\"Rating criteria: <rating criteria>\"";

void field(std::string& out, std::string_view name, std::string_view value) {
  if (!out.empty()) out += '\n';
  out += name;
  out += ": ";
  out += value;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (const auto& p : parts) {
    if (!out.empty()) out += sep;
    out += p;
  }
  return out;
}

}  // namespace

std::string render_link_info(const HyperlinkContext& link) {
  std::string out;
  field(out, "url", link.source_url);
  field(out, "anchor_text", text::normalize_whitespace(link.anchor_text));
  if (!link.image_texts.empty()) {
    std::vector<std::string> parts;
    for (const auto& t : link.image_texts) {
      parts.push_back(std::string(to_string(t.kind)) + "=" + text::normalize_whitespace(t.text));
    }
    field(out, "image_texts", join(parts, " | "));
  }
  if (!link.side_texts.empty()) {
    std::vector<std::string> parts;
    for (const auto& s : link.side_texts) parts.push_back(text::normalize_whitespace(s.text));
    field(out, "side_texts", join(parts, " | "));
  }
  return out;
}

std::string render_webpage_info(const PageContent& page) {
  std::string out;
  field(out, "url", page.target_url);
  field(out, "title", text::normalize_whitespace(page.title));
  if (!page.headers.empty()) {
    std::vector<std::string> parts;
    for (const auto& h : page.headers) parts.push_back(text::normalize_whitespace(h.text));
    field(out, "headers", join(parts, " | "));
  }
  if (!page.keywords.empty()) {
    std::vector<std::string> parts;
    for (const auto& k : page.keywords) parts.push_back(k.term);
    field(out, "keywords", join(parts, ", "));
  }
  return out;
}

std::string render_prompt(std::string_view link_info, std::string_view webpage_info) {
  std::string out(kPromptTemplate);
  auto replace = [&](std::string_view key, std::string_view value) {
    const auto pos = out.find(key);
    out.replace(pos, key.size(), value);
  };
  replace("{link_info}", link_info);
  replace("{webpage_info}", webpage_info);
  return out;
}

LikertRating parse_rating(std::string_view reply) {
  static constexpr std::string_view kMarker = "rating criteria:";
  std::string folded(reply);
  for (char& c : folded) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const auto fail = [&](const std::string& why) {
    return ParseFailure("unparseable rating (" + why + "): " + std::string(reply));
  };
  auto pos = folded.find(kMarker);
  if (pos == std::string::npos) throw fail("no 'Rating criteria:' marker");
  std::size_t i = pos + kMarker.size();
  while (i < reply.size()) {
    const unsigned char c = static_cast<unsigned char>(reply[i]);
    if (std::isdigit(c)) break;
    if (std::isspace(c) || (std::ispunct(c) && c != '-' && c != '+')) {
      ++i;
      continue;
    }
    throw fail("unexpected text before the rating");
  }
  std::size_t end = i;
  while (end < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end]))) ++end;
  if (end == i) throw fail("no rating value");
  if (end - i > 1) throw fail("rating out of range");
  const int value = reply[i] - '0';
  if (value < 1 || value > 5) throw fail("rating out of range");
  if (end < reply.size() && (std::isalpha(static_cast<unsigned char>(reply[end])) || reply[end] == '.') &&
      end + 1 < reply.size() && std::isdigit(static_cast<unsigned char>(reply[end + 1]))) {
    throw fail("rating is not an integer");
  }
  return {value, std::string(reply)};
}

LlmConfig LlmConfig::from_env() {
  LlmConfig c;
  auto env = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  c.endpoint = env("SEMLINK_LLM_ENDPOINT");
  c.model = env("SEMLINK_LLM_MODEL");
  c.api_key = env("SEMLINK_LLM_KEY");
  return c;
}

void LlmConfig::validate() const {
  if (endpoint.empty()) throw std::invalid_argument("LLM endpoint is not configured");
  if (rating_threshold < 2 || rating_threshold > 5) {
    throw std::invalid_argument("rating threshold must be in 2..5");
  }
  if (concurrency < 1) throw std::invalid_argument("concurrency must be at least 1");
  if (max_attempts < 1) throw std::invalid_argument("max_attempts must be at least 1");
}

std::string chat_completion(const LlmConfig& config, const std::string& prompt) {
  const json request{{"model", config.model},
                     {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
                     {"temperature", 0}};
  http::Options opts;
  opts.timeout_s = config.timeout_s;
  if (!config.api_key.empty()) opts.headers.emplace_back("Authorization", "Bearer " + config.api_key);

  double backoff = config.retry_backoff_s;
  for (int attempt = 1;; ++attempt) {
    try {
      const http::Response res = http::post_json(config.endpoint, request.dump(), opts);
      if (res.status >= 500 || res.status == 429) throw TransportFailure("LLM endpoint returned " + std::to_string(res.status));
      if (res.status != 200) throw ServerRejection(res.status, res.body);
      json doc;
      try {
        doc = json::parse(res.body);
      } catch (const json::exception& e) {
        throw ProtocolViolation(std::string("chat reply is not JSON: ") + e.what());
      }
      const json* content = nullptr;
      if (doc.is_object() && doc.contains("choices") && doc["choices"].is_array() && !doc["choices"].empty()) {
        const json& choice = doc["choices"][0];
        if (choice.is_object() && choice.contains("message") && choice["message"].is_object() &&
            choice["message"].contains("content") && choice["message"]["content"].is_string()) {
          content = &choice["message"]["content"];
        }
      }
      if (!content) throw ProtocolViolation("chat reply lacks choices[0].message.content");
      return content->get<std::string>();
    } catch (const TransportFailure&) {
      if (attempt >= config.max_attempts) throw;
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
  }
}

BaselineReport llm_baseline_evaluate(const LlmConfig& config, const std::vector<CorpusPair>& pairs) {
  config.validate();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].label == Label::Unlabeled) {
      throw std::invalid_argument("pair " + std::to_string(i) + " is unlabeled");
    }
  }
  using Clock = std::chrono::steady_clock;
  BaselineReport report;
  report.pairs.resize(pairs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < pairs.size(); i = next++) {
      BaselinePairResult& r = report.pairs[i];
      const std::string prompt =
          render_prompt(render_link_info(pairs[i].link), render_webpage_info(pairs[i].page));
      const auto start = Clock::now();
      try {
        r.raw_reply = chat_completion(config, prompt);
        const LikertRating rating = parse_rating(r.raw_reply);
        r.rating = rating.value;
        r.status = BaselineStatus::Rated;
      } catch (const ParseFailure& e) {
        r.status = BaselineStatus::ParseFailure;
        r.error = e.what();
      } catch (const Error& e) {
        r.status = BaselineStatus::Gap;
        r.error = e.what();
      }
      r.latency_s = std::chrono::duration<double>(Clock::now() - start).count();
    }
  };
  const auto start = Clock::now();
  const int threads = std::min<int>(config.concurrency, static_cast<int>(std::max<std::size_t>(1, pairs.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  report.latency.wall_seconds = std::chrono::duration<double>(Clock::now() - start).count();

  double latency_sum = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const BaselinePairResult& r = report.pairs[i];
    latency_sum += r.latency_s;
    if (r.status == BaselineStatus::ParseFailure) {
      ++report.parse_failures;
      continue;
    }
    if (r.status == BaselineStatus::Gap) {
      ++report.gaps;
      continue;
    }
    const bool relevant = *r.rating >= config.rating_threshold;
    if (pairs[i].label == Label::Positive) {
      ++(relevant ? report.counts.tp : report.counts.fn);
    } else {
      ++(relevant ? report.counts.fp : report.counts.tn);
    }
  }
  report.metrics = compute_metrics(report.counts);
  report.latency.requests = pairs.size();
  if (!pairs.empty()) report.latency.mean_latency_s = latency_sum / static_cast<double>(pairs.size());
  if (!pairs.empty() && report.latency.wall_seconds > 0.0) {
    report.latency.pairs_per_second = static_cast<double>(pairs.size()) / report.latency.wall_seconds;
  }
  return report;
}

json to_json(const LatencyStats& s) {
  json j{{"requests", s.requests}, {"wall_seconds", s.wall_seconds}, {"mean_latency_s", s.mean_latency_s}};
  j["pairs_per_second"] = s.pairs_per_second ? json(*s.pairs_per_second) : json(nullptr);
  return j;
}

}  // namespace semlink
