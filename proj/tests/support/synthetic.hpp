#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semlink/corpus.hpp"

namespace semlink::testing {

struct Topic {
  std::string name;
  std::string domain;
  std::vector<std::string> words;
};

/// Five topics with pairwise disjoint vocabularies and one domain each.
const std::vector<Topic>& synthetic_topics();

struct SyntheticOptions {
  int topics = 5;
  int pages_per_topic = 60;
  double generic_fraction = 0.2;  // links whose anchor says nothing ("Read More")
  double image_fraction = 0.1;    // image links described only by alt text
  std::uint64_t seed = 7;
};

/// Positive pairs: each link's anchor, alt text and side texts are drawn
/// from the same topic as its target page.
std::vector<CorpusPair> synthetic_corpus(const SyntheticOptions& options = {});

bool is_generic_anchor(const std::string& anchor);

/// Returns `positives` followed by one Negative per positive, pairing its
/// link with a page of a different topic.
std::vector<CorpusPair> with_cross_topic_negatives(const std::vector<CorpusPair>& positives,
                                                   std::uint64_t seed);

}  // namespace semlink::testing
