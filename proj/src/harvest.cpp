#include "semlink/harvest.hpp"

#include <cctype>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "semlink/html.hpp"
#include "semlink/http_client.hpp"
#include "semlink/page_content.hpp"
#include "semlink/text.hpp"
#include "semlink/url.hpp"

namespace semlink {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoFailure("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string origin_of(const Url& u) { return u.scheme + "://" + u.authority; }

}  // namespace

std::string_view to_string(SeedCategory c) {
  switch (c) {
    case SeedCategory::News: return "news";
    case SeedCategory::ECommerce: return "ecommerce";
    case SeedCategory::Education: return "education";
    case SeedCategory::Government: return "government";
    case SeedCategory::TechBlog: return "techblog";
    case SeedCategory::Other: return "other";
  }
  return "other";
}

SeedCategory parse_category(std::string_view name) {
  std::string n;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  if (n == "news") return SeedCategory::News;
  if (n == "ecommerce") return SeedCategory::ECommerce;
  if (n == "education") return SeedCategory::Education;
  if (n == "government") return SeedCategory::Government;
  if (n == "techblog" || n == "tech") return SeedCategory::TechBlog;
  return SeedCategory::Other;
}

SeedList SeedList::parse(std::string_view text) {
  SeedList list;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = std::min(text.find('\n', pos), text.size());
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    std::string url = line;
    SeedCategory category = SeedCategory::Other;
    if (const auto comma = line.find(','); comma != std::string::npos) {
      url = trim(line.substr(0, comma));
      category = parse_category(line.substr(comma + 1));
    }
    const auto parsed = Url::parse(url);
    if (!parsed || !parsed->has_authority || parsed->host().empty() ||
        (parsed->scheme != "http" && parsed->scheme != "https")) {
      throw ParseFailure("seed list line " + std::to_string(line_no) + ": not an absolute http(s) URL: " + url);
    }
    if (seen.insert(url).second) list.entries.push_back({url, category});
  }
  return list;
}

SeedList SeedList::load(const std::filesystem::path& path) { return parse(read_file(path)); }

void FetchPolicy::validate() const {
  if (!(timeout_s > 0.0)) throw std::invalid_argument("timeout must be positive");
  if (parallelism < 1) throw std::invalid_argument("parallelism must be at least 1");
  if (max_retries < 0) throw std::invalid_argument("max_retries must be non-negative");
  if (retry_backoff_s < 0.0) throw std::invalid_argument("retry_backoff must be non-negative");
  if (per_host_interval_s < 0.0) throw std::invalid_argument("per-host interval must be non-negative");
  if (max_redirects < 0) throw std::invalid_argument("max_redirects must be non-negative");
}

std::string rendered_dump_name(std::string_view url) {
  std::string s(url);
  if (const auto p = s.find("://"); p != std::string::npos) s.erase(p, 3);
  for (char& c : s) {
    const unsigned char u = static_cast<unsigned char>(c);
    if (!(std::isalnum(u) || c == '.' || c == '-')) c = '_';
  }
  return s + ".html";
}

RobotsRules RobotsRules::parse(std::string_view robots_txt, std::string_view user_agent) {
  std::string token = lower(user_agent.substr(0, user_agent.find('/')));
  struct Group {
    std::vector<std::string> agents;
    std::vector<std::pair<std::string, bool>> rules;
  };
  std::vector<Group> groups;
  bool in_agents = false;
  std::size_t pos = 0;
  while (pos <= robots_txt.size()) {
    const std::size_t nl = std::min(robots_txt.find('\n', pos), robots_txt.size());
    std::string line(robots_txt.substr(pos, nl - pos));
    pos = nl + 1;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    const std::string key = lower(trim(line.substr(0, colon)));
    const std::string value = trim(line.substr(colon + 1));
    if (key == "user-agent") {
      if (!in_agents) groups.emplace_back();
      groups.back().agents.push_back(lower(value));
      in_agents = true;
    } else if (key == "allow" || key == "disallow") {
      in_agents = false;
      if (groups.empty()) continue;
      if (value.empty()) continue;  // "Disallow:" allows everything
      groups.back().rules.emplace_back(value, key == "allow");
    } else {
      in_agents = false;
    }
  }
  RobotsRules out;
  bool specific = false;
  for (const auto& g : groups) {
    for (const auto& a : g.agents) {
      if (a != "*" && !a.empty() && token.find(a) != std::string::npos) specific = true;
    }
  }
  for (const auto& g : groups) {
    bool applies = false;
    for (const auto& a : g.agents) {
      applies |= specific ? (a != "*" && !a.empty() && token.find(a) != std::string::npos) : a == "*";
    }
    if (applies) out.rules_.insert(out.rules_.end(), g.rules.begin(), g.rules.end());
  }
  return out;
}

namespace {

// robots.txt patterns: '*' matches any run, a trailing '$' anchors the end.
bool robots_match(std::string_view pattern, std::string_view path) {
  bool anchored = !pattern.empty() && pattern.back() == '$';
  if (anchored) pattern.remove_suffix(1);
  // Iterative glob with backtracking on the last '*'.
  std::size_t p = 0, s = 0, star = std::string_view::npos, mark = 0;
  while (s < path.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = s;
    } else if (p < pattern.size() && pattern[p] == path[s]) {
      ++p;
      ++s;
    } else if (p == pattern.size() && !anchored) {
      return true;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      s = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

}  // namespace

bool RobotsRules::allowed(std::string_view path) const {
  std::size_t best_len = 0;
  bool best_allow = true;
  bool matched = false;
  for (const auto& [pattern, allow] : rules_) {
    if (!robots_match(pattern, path)) continue;
    if (!matched || pattern.size() > best_len || (pattern.size() == best_len && allow)) {
      best_len = pattern.size();
      best_allow = allow;
      matched = true;
    }
  }
  return best_allow;
}

void HostGate::acquire(const std::string& host) {
  Clock::time_point start;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !slots_[host].busy; });
    Slot& slot = slots_[host];
    slot.busy = true;
    start = slot.next_start;
  }
  std::this_thread::sleep_until(start);
  std::lock_guard lock(mu_);
  slots_[host].next_start =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(interval_));
}

void HostGate::release(const std::string& host) {
  {
    std::lock_guard lock(mu_);
    slots_[host].busy = false;
  }
  cv_.notify_all();
}

Fetcher::Fetcher(FetchPolicy policy) : policy_(std::move(policy)), gate_(policy_.per_host_interval_s) {
  policy_.validate();
}

Fetcher::Raw Fetcher::get_with_retries(const std::string& url) {
  const auto parsed = Url::parse(url);
  if (!parsed || !parsed->has_authority) throw TransportFailure("not an absolute URL: " + url);
  const std::string host = lower(parsed->authority);
  http::Options opts;
  opts.timeout_s = policy_.timeout_s;
  opts.user_agent = policy_.user_agent;
  double backoff = policy_.retry_backoff_s;
  for (int attempt = 0;; ++attempt) {
    gate_.acquire(host);
    try {
      ++requests_;
      http::Response res = http::get(url, opts);
      gate_.release(host);
      return {res.status, std::move(res.body), std::move(res.content_type), std::move(res.location)};
    } catch (const TransportFailure&) {
      gate_.release(host);
      if (attempt >= policy_.max_retries) throw;
    }
    std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
    backoff *= 2.0;
  }
}

bool Fetcher::robots_allow(const std::string& url) {
  const auto parsed = Url::parse(url);
  if (!parsed || !parsed->has_authority) return true;
  const std::string origin = lower(origin_of(*parsed));
  std::shared_ptr<RobotsRules> rules;
  {
    std::lock_guard lock(robots_mu_);
    if (const auto it = robots_.find(origin); it != robots_.end()) rules = it->second;
  }
  if (!rules) {
    RobotsRules parsed_rules = RobotsRules::allow_all();
    try {
      const Raw raw = get_with_retries(origin + "/robots.txt");
      if (raw.status == 200) parsed_rules = RobotsRules::parse(raw.body, policy_.user_agent);
    } catch (const TransportFailure&) {
      // Unreachable robots.txt: no restrictions known.
    }
    rules = std::make_shared<RobotsRules>(std::move(parsed_rules));
    std::lock_guard lock(robots_mu_);
    robots_.try_emplace(origin, rules);
  }
  std::string path = parsed->path.empty() ? "/" : parsed->path;
  if (parsed->has_query) path += "?" + parsed->query;
  return rules->allowed(path);
}

namespace {

std::string decode_body(std::string body, const std::string& content_type) {
  const std::string ct = lower(content_type);
  std::string charset;
  if (const auto p = ct.find("charset="); p != std::string::npos) {
    charset = ct.substr(p + 8);
    charset = charset.substr(0, charset.find_first_of("; "));
    if (!charset.empty() && charset.front() == '"') charset = charset.substr(1, charset.find('"', 1) - 1);
  }
  if (charset == "iso-8859-1" || charset == "latin1" || charset == "latin-1" ||
      charset == "windows-1252" || charset == "cp1252" || charset == "iso8859-1") {
    return text::latin1_to_utf8(body);
  }
  if (text::is_valid_utf8(body)) return body;
  return text::latin1_to_utf8(body);
}

bool is_redirect(int status) {
  return status == 301 || status == 302 || status == 303 || status == 307 || status == 308;
}

}  // namespace

FetchResult Fetcher::fetch(const std::string& url) {
  if (policy_.rendered_html_dir) {
    const auto dump = *policy_.rendered_html_dir / rendered_dump_name(url);
    if (std::filesystem::exists(dump)) return {200, url, decode_body(read_file(dump), ""), "text/html"};
  }
  std::string current = url;
  for (int hop = 0;; ++hop) {
    if (policy_.respect_robots && !robots_allow(current)) throw RobotsDenied("robots.txt disallows " + current);
    Raw raw = get_with_retries(current);
    if (is_redirect(raw.status) && !raw.location.empty()) {
      if (hop >= policy_.max_redirects) {
        throw TooManyRedirects("more than " + std::to_string(policy_.max_redirects) + " redirects from " + url);
      }
      const auto next = resolve_url(current, raw.location);
      if (!next) throw TransportFailure("unresolvable redirect target: " + raw.location);
      current = *next;
      continue;
    }
    return {raw.status, current, decode_body(std::move(raw.body), raw.content_type), raw.content_type};
  }
}

std::optional<std::vector<std::uint8_t>> Fetcher::fetch_bytes(const std::string& url) {
  try {
    if (policy_.respect_robots && !robots_allow(url)) return std::nullopt;
    const Raw raw = get_with_retries(url);
    if (raw.status != 200) return std::nullopt;
    return std::vector<std::uint8_t>(raw.body.begin(), raw.body.end());
  } catch (const Error&) {
    return std::nullopt;
  }
}

FetchResult fetch(const std::string& url, const FetchPolicy& policy) {
  Fetcher fetcher(policy);
  return fetcher.fetch(url);
}

namespace {

struct TargetState {
  std::optional<PageContent> page;
  std::string failure;  // drop reason when page is absent
};

}  // namespace

SeedOutcome harvest_seed(Fetcher& fetcher, const std::string& seed_url, const HarvestOptions& options) {
  SeedOutcome out;
  out.seed_url = seed_url;
  FetchResult seed;
  try {
    seed = fetcher.fetch(seed_url);
  } catch (const Error& e) {
    out.error = e.what();
    return out;
  }
  if (seed.status != 200) {
    out.error = "seed returned HTTP " + std::to_string(seed.status);
    return out;
  }
  html::Document doc;
  try {
    doc = html::parse_html(seed.body);
  } catch (const ParseFailure& e) {
    out.error = e.what();
    return out;
  }
  auto anchors = discover_anchors(doc, seed.final_url);
  if (anchors.size() > fetcher.policy().max_links_per_seed) anchors.resize(fetcher.policy().max_links_per_seed);
  out.attempted = anchors.size();

  ImageFetcher image_fetch;
  if (options.ocr) image_fetch = [&](const std::string& u) { return fetcher.fetch_bytes(u); };

  std::unordered_map<std::string, TargetState> targets;
  for (const auto& anchor : anchors) {
    if (options.cancel && options.cancel->load()) break;
    if (const auto drop = filter_navigational(anchor)) {
      ++out.dropped[std::string(to_string(*drop))];
      continue;
    }
    const std::string& target = *anchor.resolved_url;
    const std::string scheme = href_scheme(target);
    if (scheme != "http" && scheme != "https") {
      ++out.dropped["UnsupportedScheme"];
      continue;
    }
    HyperlinkContext link =
        build_hyperlink_context(doc, anchor, seed.final_url, options.side_texts, options.ocr, image_fetch, &out.warnings);

    auto it = targets.find(target);
    if (it == targets.end()) {
      TargetState state;
      try {
        FetchResult r = fetcher.fetch(target);
        ++out.status_histogram[r.status];
        if (r.status == 200) {
          PageContent page = build_page_content(r.body, target, 200);
          if (r.final_url != target) page.final_url = r.final_url;
          state.page = std::move(page);
        } else {
          state.failure = "NonSuccessStatus";
        }
      } catch (const RobotsDenied& e) {
        state.failure = "RobotsDenied";
        out.warnings.push_back(e.what());
      } catch (const Error& e) {
        state.failure = "FetchFailed";
        ++out.target_failures;
        out.warnings.push_back(e.what());
      }
      it = targets.emplace(target, std::move(state)).first;
    }
    if (!it->second.page) {
      ++out.dropped[it->second.failure];
      continue;
    }
    CorpusPair pair;
    pair.link = std::move(link);
    pair.page = *it->second.page;
    pair.label = Label::Positive;
    pair.collected_at = utc_timestamp_now();
    const CleanResult verdict = clean_pair(pair);
    if (!verdict.accepted) {
      ++out.dropped[std::string(to_string(*verdict.reason))];
      continue;
    }
    out.pairs.push_back(std::move(pair));
  }
  return out;
}

json HarvestStats::to_json() const {
  json status = json::object();
  for (const auto& [code, n] : status_histogram) status[std::to_string(code)] = n;
  return {{"seeds", seeds},
          {"seeds_failed", seeds_failed},
          {"attempted", attempted},
          {"pairs", pairs},
          {"pairs_per_seed", pairs_per_seed},
          {"dropped", dropped},
          {"status_histogram", status},
          {"target_failures", target_failures},
          {"errors", errors},
          {"cancelled", cancelled}};
}

HarvestStats harvest_all(const SeedList& seeds, const FetchPolicy& policy,
                         const std::filesystem::path& out_path, const HarvestOptions& options) {
  Fetcher fetcher(policy);
  HarvestStats stats;
  CorpusFile corpus;
  std::mutex mu;
  write_corpus(corpus, out_path);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.entries.size(); i = next++) {
      if (options.cancel && options.cancel->load()) return;
      SeedOutcome outcome = harvest_seed(fetcher, seeds.entries[i].url, options);
      std::lock_guard lock(mu);
      if (failure) return;
      try {
        ++stats.seeds;
        stats.attempted += outcome.attempted;
        stats.pairs += outcome.pairs.size();
        stats.pairs_per_seed[outcome.seed_url] = outcome.pairs.size();
        for (const auto& [k, v] : outcome.dropped) stats.dropped[k] += v;
        for (const auto& [k, v] : outcome.status_histogram) stats.status_histogram[k] += v;
        stats.target_failures += outcome.target_failures;
        if (outcome.error) {
          ++stats.seeds_failed;
          stats.errors.push_back(outcome.seed_url + ": " + *outcome.error);
        }
        for (auto& p : outcome.pairs) corpus.pairs.push_back(p);
        write_corpus(corpus, out_path);
        if (options.on_seed_written) options.on_seed_written(outcome);
      } catch (...) {
        failure = std::current_exception();
        return;
      }
    }
  };
  const int threads = std::max(1, std::min<int>(policy.parallelism, static_cast<int>(seeds.entries.size())));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  stats.cancelled = options.cancel && options.cancel->load();
  return stats;
}

int AuditReport::bucket_of(double cosine) {
  const int b = static_cast<int>(std::floor((cosine + 1.0) * 10.0));
  return std::clamp(b, 0, kBuckets - 1);
}

json AuditReport::to_json() const {
  auto round3 = [](double x) { return std::round(x * 1000.0) / 1000.0; };
  json buckets = json::array();
  for (int b = 0; b < kBuckets; ++b) {
    buckets.push_back({{"lo", round3(-1.0 + 0.1 * b)}, {"hi", round3(-1.0 + 0.1 * (b + 1))}, {"count", histogram[b]}});
  }
  return {{"evaluated", evaluated},
          {"skipped_empty_anchor", skipped_empty_anchor},
          {"skipped_empty_title", skipped_empty_title},
          {"fraction_above_0_5", round3(fraction_above_05)},
          {"fraction_above_0_9", round3(fraction_above_09)},
          {"histogram", std::move(buckets)}};
}

AuditReport base_similarity_audit(const std::vector<CorpusPair>& pairs, EmbeddingProvider& provider,
                                  EmbeddingCache* cache) {
  AuditReport report;
  std::vector<std::string> anchors, titles;
  for (const auto& p : pairs) {
    std::string a = text::normalize_whitespace(p.link.anchor_text);
    std::string t = text::normalize_whitespace(p.page.title);
    if (a.empty()) {
      ++report.skipped_empty_anchor;
      continue;
    }
    if (t.empty()) {
      ++report.skipped_empty_title;
      continue;
    }
    anchors.push_back(std::move(a));
    titles.push_back(std::move(t));
  }
  EmbeddingCache local;
  EmbeddingCache& c = cache ? *cache : local;
  const auto ea = c.embed(provider, anchors);
  const auto et = c.embed(provider, titles);
  std::size_t above05 = 0, above09 = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) {
    const double cos = cosine_similarity(ea[i], et[i]);
    report.similarities.push_back(cos);
    ++report.histogram[AuditReport::bucket_of(cos)];
    above05 += cos > 0.5;
    above09 += cos > 0.9;
  }
  report.evaluated = ea.size();
  if (report.evaluated > 0) {
    report.fraction_above_05 = static_cast<double>(above05) / static_cast<double>(report.evaluated);
    report.fraction_above_09 = static_cast<double>(above09) / static_cast<double>(report.evaluated);
  }
  return report;
}

}  // namespace semlink
