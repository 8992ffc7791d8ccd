#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "textattr/attribution.hpp"
#include "textattr/corpus.hpp"
#include "textattr/model.hpp"

namespace textattr {

// Features holding the top K percent of attribution mass by rank. n is
// ceil(K * M / 100); indices are ordered by decreasing value with ties going
// to the lower feature index.
struct RankedSet {
  std::vector<int> indices;
  int n = 0;
};

RankedSet top_k_percent(const Attribution& attr, int k_percent);

// Jaccard similarity of the two top-K sets. Attributions must have the same
// number of features.
double jaccard_at_k(const Attribution& a, const Attribution& b, int k_percent);

// Median of a non-empty sample; even sizes average the central pair.
double median(std::vector<double> values);

// 21 equal bins over [0, 1]; bin = min(20, floor(v * 21)).
std::array<int, 21> histogram21(const std::vector<double>& values);

// One document scored against the same text under two models, at token and
// sentence granularity.
struct AttributionQuad {
  std::string doc_id;
  Attribution a_token;
  Attribution b_token;
  Attribution a_sentence;
  Attribution b_sentence;
};

struct RobustnessRow {
  std::string doc_id;
  double j_token = 0.0;
  double j_sentence = 0.0;
  double diff = 0.0;  // j_sentence - j_token
};

struct RobustnessReport {
  std::vector<RobustnessRow> rows;
  std::size_t excluded = 0;  // documents whose two predictions disagreed
  double median_diff = 0.0;  // NaN when no document was comparable
  std::array<int, 21> histogram_token{};
  std::array<int, 21> histogram_sentence{};
};

// Shared comparison: documents where the two models predict different
// classes are excluded, the rest contribute top-K Jaccard at both
// granularities. diffinit pairs two training runs that differ only in their
// init seed; untrained pairs a trained model with its head re-randomized.
RobustnessReport diffinit_test(const std::vector<AttributionQuad>& quads,
                               int k_percent);
RobustnessReport untrained_test(const std::vector<AttributionQuad>& quads,
                                int k_percent);

// Median pairwise top-K Jaccard across repeated runs on one document.
double overlap(const std::vector<Attribution>& runs, int k_percent);

struct InfidelityResult {
  double percent = 0.0;        // share of tokens masked when the flip happened
  bool flipped = false;        // false means even full masking kept the class
  std::size_t masked_tokens = 0;
};

// Masks features in decreasing attribution order until the predicted class
// changes. Reports the masked-token percentage at the flip; 100 with
// flipped=false if the prediction never changes.
InfidelityResult infidelity(const TextClassifier& model, const Document& doc,
                            const Attribution& attr);

struct AnnotationRecord {
  int label = 0;       // true class y
  int answer = 0;      // annotator's class estimate
  double seconds = 0;  // time spent on the item
};

// Mutual information of the label/answer contingency table, in bits by
// default (nats when requested).
double mutual_information(const std::vector<AnnotationRecord>& records,
                          bool nats = false);

// Information transfer rate: mutual information over mean answer time.
double itr(const std::vector<AnnotationRecord>& records, bool nats = false);

}  // namespace textattr
