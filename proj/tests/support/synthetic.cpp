#include "synthetic.hpp"

#include <algorithm>
#include <cctype>

#include "semlink/rng.hpp"
#include "semlink/url.hpp"

namespace semlink::testing {

namespace {

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

const std::vector<std::string> kGenericAnchors = {"Read More", "Click Here", "Learn More", "Details",
                                                  "More Info"};

// `n` distinct words of the topic.
std::vector<std::string> sample(const Topic& t, std::size_t n, Rng& rng) {
  std::vector<std::string> pool = t.words;
  rng.shuffle(pool);
  pool.resize(std::min(n, pool.size()));
  return pool;
}

std::string pick_word(const Topic& t, Rng& rng) {
  return t.words[static_cast<std::size_t>(rng.below(t.words.size()))];
}

std::string phrase(const std::vector<std::string>& words, bool title_case) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out += ' ';
    out += title_case ? capitalize(w) : w;
  }
  return out;
}

}  // namespace

const std::vector<Topic>& synthetic_topics() {
  static const std::vector<Topic> topics = {
      {"education", "learn.example",
       split_words("algebra geometry calculus syllabus semester lecture homework curriculum classroom "
                   "teacher student exam tutoring course enrollment professor textbook quiz grading "
                   "diploma scholarship campus tuition seminar thesis laboratory biology chemistry "
                   "physics literature essay vocabulary kindergarten graduation lesson worksheet "
                   "assignment faculty university")},
      {"cooking", "kitchen.example",
       split_words("recipe oven bake flour sugar butter garlic onion pasta sauce simmer roast grill "
                   "marinade dough yeast skillet spatula chef kitchen dessert pastry soup broth spice "
                   "pepper cinnamon vanilla chocolate cream cheese tomato basil olive vinegar salad "
                   "noodle dumpling braise frying")},
      {"astronomy", "stars.example",
       split_words("telescope galaxy nebula planet orbit comet asteroid meteor eclipse supernova "
                   "constellation observatory cosmos satellite lunar solar jupiter saturn mars venus "
                   "mercury neptune uranus pluto quasar pulsar spectrum redshift gravity astronaut "
                   "rocket spacecraft starlight stargazing celestial horizon zenith equinox")},
      {"finance", "money.example",
       split_words("stock bond dividend portfolio investor broker equity mortgage loan interest "
                   "inflation budget savings pension retirement tax audit revenue profit earnings "
                   "hedge fund liquidity credit debt banking currency forex valuation asset capital "
                   "shareholder ledger invoice accounting insurance annuity treasury")},
      {"gardening", "garden.example",
       split_words("garden soil compost seedling fertilizer mulch pruning shrub perennial tulip rose "
                   "orchid fern lavender lawn irrigation greenhouse trowel shovel weeding vegetable "
                   "pumpkin blossom petal bulb hydrangea daisy sunflower orchard pollinator bee aphid "
                   "trellis planter hose sprinkler topsoil manure")},
  };
  return topics;
}

bool is_generic_anchor(const std::string& anchor) {
  return std::find(kGenericAnchors.begin(), kGenericAnchors.end(), anchor) != kGenericAnchors.end();
}

std::vector<CorpusPair> synthetic_corpus(const SyntheticOptions& options) {
  Rng rng(options.seed);
  const auto& topics = synthetic_topics();
  std::vector<CorpusPair> out;
  for (int t = 0; t < options.topics; ++t) {
    const Topic& topic = topics[static_cast<std::size_t>(t) % topics.size()];
    for (int i = 0; i < options.pages_per_topic; ++i) {
      CorpusPair pair;
      pair.label = Label::Positive;
      pair.collected_at = "2024-01-01T00:00:00Z";

      PageContent& page = pair.page;
      page.target_url = "https://" + topic.domain + "/articles/" + std::to_string(i) + ".html";
      page.http_status = 200;
      const auto title_words = sample(topic, 3, rng);
      page.title = phrase(title_words, true);
      page.headers.push_back({1, phrase(sample(topic, 3, rng), true)});
      page.headers.push_back({2, phrase(sample(topic, 2, rng), true)});
      const auto kw = sample(topic, 8, rng);
      for (std::size_t k = 0; k < kw.size(); ++k) page.keywords.push_back({kw[k], 1.5 - 0.1 * static_cast<double>(k)});

      HyperlinkContext& link = pair.link;
      link.source_url = "https://" + topic.domain + "/section" + std::to_string(i % 6) + ".html";
      const double kind = rng.uniform();
      if (kind < options.generic_fraction) {
        link.anchor_text = kGenericAnchors[static_cast<std::size_t>(rng.below(kGenericAnchors.size()))];
      } else if (kind < options.generic_fraction + options.image_fraction) {
        link.link_kind = LinkKind::Image;
        link.image_texts.push_back({ImageTextKind::Alt, phrase({title_words[0], pick_word(topic, rng)}, false)});
      } else {
        link.anchor_text = phrase({title_words[static_cast<std::size_t>(rng.below(3))], pick_word(topic, rng)}, true);
      }
      const int sides = 3 + static_cast<int>(rng.below(3));
      for (int k = 1; k <= sides; ++k) {
        link.side_texts.push_back({"Our " + phrase(sample(topic, 3, rng), false) + " notes", k});
      }
      out.push_back(std::move(pair));
    }
  }
  return out;
}

std::vector<CorpusPair> with_cross_topic_negatives(const std::vector<CorpusPair>& positives,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  std::vector<CorpusPair> out = positives;
  for (const auto& p : positives) {
    const std::string host = url_host(p.link.source_url);
    for (;;) {
      const CorpusPair& other = positives[static_cast<std::size_t>(rng.below(positives.size()))];
      if (url_host(other.page.target_url) == host) continue;
      CorpusPair n;
      n.link = p.link;
      n.page = other.page;
      n.label = Label::Negative;
      n.collected_at = p.collected_at;
      out.push_back(std::move(n));
      break;
    }
  }
  return out;
}

}  // namespace semlink::testing
