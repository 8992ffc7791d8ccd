#include "textattr/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "textattr/errors.hpp"

namespace textattr {

RankedSet top_k_percent(const Attribution& attr, int k_percent) {
  if (k_percent < 1 || k_percent > 100) {
    throw ConfigError("k percent must be in [1, 100]");
  }
  const std::size_t m = attr.values.size();
  if (m == 0) throw ConfigError("attribution has no features");
  // Integer ceiling; floating-point rounding must not change the count.
  const int n = static_cast<int>(
      (static_cast<std::size_t>(k_percent) * m + 99) / 100);

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (attr.values[static_cast<std::size_t>(a)] !=
        attr.values[static_cast<std::size_t>(b)]) {
      return attr.values[static_cast<std::size_t>(a)] >
             attr.values[static_cast<std::size_t>(b)];
    }
    return a < b;
  });
  RankedSet set;
  set.n = n;
  set.indices.assign(order.begin(), order.begin() + n);
  return set;
}

double jaccard_at_k(const Attribution& a, const Attribution& b,
                    int k_percent) {
  if (a.values.size() != b.values.size()) {
    throw ConfigError("attributions have different feature counts");
  }
  RankedSet sa = top_k_percent(a, k_percent);
  RankedSet sb = top_k_percent(b, k_percent);
  std::vector<int> xa = sa.indices;
  std::vector<int> xb = sb.indices;
  std::sort(xa.begin(), xa.end());
  std::sort(xb.begin(), xb.end());
  std::size_t inter = 0;
  std::size_t i = 0, j = 0;
  while (i < xa.size() && j < xb.size()) {
    if (xa[i] == xb[j]) {
      ++inter;
      ++i;
      ++j;
    } else if (xa[i] < xb[j]) {
      ++i;
    } else {
      ++j;
    }
  }
  const std::size_t uni = xa.size() + xb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double median(std::vector<double> values) {
  if (values.empty()) throw ConfigError("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  if (n % 2 == 1) return values[n / 2];
  return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::array<int, 21> histogram21(const std::vector<double>& values) {
  std::array<int, 21> bins{};
  for (double v : values) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ConfigError("histogram values must lie in [0, 1]");
    }
    const int bin = std::min(20, static_cast<int>(std::floor(v * 21.0)));
    ++bins[static_cast<std::size_t>(bin)];
  }
  return bins;
}

namespace {

RobustnessReport robustness_compare(const std::vector<AttributionQuad>& quads,
                                    int k_percent) {
  if (quads.empty()) throw ConfigError("no documents to compare");
  RobustnessReport report;
  std::vector<double> j_token, j_sentence, diffs;
  for (const auto& q : quads) {
    if (q.a_token.target_class != q.b_token.target_class) {
      ++report.excluded;
      continue;
    }
    RobustnessRow row;
    row.doc_id = q.doc_id;
    row.j_token = jaccard_at_k(q.a_token, q.b_token, k_percent);
    row.j_sentence = jaccard_at_k(q.a_sentence, q.b_sentence, k_percent);
    row.diff = row.j_sentence - row.j_token;
    j_token.push_back(row.j_token);
    j_sentence.push_back(row.j_sentence);
    diffs.push_back(row.diff);
    report.rows.push_back(std::move(row));
  }
  if (diffs.empty()) {
    report.median_diff = std::numeric_limits<double>::quiet_NaN();
  } else {
    report.median_diff = median(diffs);
    report.histogram_token = histogram21(j_token);
    report.histogram_sentence = histogram21(j_sentence);
  }
  return report;
}

}  // namespace

RobustnessReport diffinit_test(const std::vector<AttributionQuad>& quads,
                               int k_percent) {
  return robustness_compare(quads, k_percent);
}

RobustnessReport untrained_test(const std::vector<AttributionQuad>& quads,
                                int k_percent) {
  return robustness_compare(quads, k_percent);
}

double overlap(const std::vector<Attribution>& runs, int k_percent) {
  if (runs.size() < 2) throw ConfigError("overlap needs at least two runs");
  std::vector<double> pairwise;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (std::size_t j = i + 1; j < runs.size(); ++j) {
      pairwise.push_back(jaccard_at_k(runs[i], runs[j], k_percent));
    }
  }
  return median(std::move(pairwise));
}

InfidelityResult infidelity(const TextClassifier& model, const Document& doc,
                            const Attribution& attr) {
  Partition partition = make_partition(doc, attr.granularity);
  if (partition.groups.size() != attr.values.size()) {
    throw SchemaError("attribution does not match the document partition");
  }
  const int original = forward(model, doc.tokens).predicted;

  std::vector<int> order(attr.values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (attr.values[static_cast<std::size_t>(a)] !=
        attr.values[static_cast<std::size_t>(b)]) {
      return attr.values[static_cast<std::size_t>(a)] >
             attr.values[static_cast<std::size_t>(b)];
    }
    return a < b;
  });

  std::vector<int> tokens = doc.tokens;
  const auto total = static_cast<double>(doc.tokens.size());
  InfidelityResult result;
  for (int g : order) {
    for (int pos : partition.groups[static_cast<std::size_t>(g)]) {
      tokens[static_cast<std::size_t>(pos)] = Vocab::unk_id;
    }
    result.masked_tokens +=
        partition.groups[static_cast<std::size_t>(g)].size();
    if (forward(model, tokens).predicted != original) {
      result.flipped = true;
      result.percent =
          100.0 * static_cast<double>(result.masked_tokens) / total;
      return result;
    }
  }
  result.flipped = false;
  result.percent = 100.0;
  return result;
}

double mutual_information(const std::vector<AnnotationRecord>& records,
                          bool nats) {
  if (records.empty()) throw ConfigError("no annotation records");
  int label_max = 0, answer_max = 0;
  for (const auto& r : records) {
    if (r.label < 0 || r.answer < 0) {
      throw SchemaError("annotation classes must be non-negative");
    }
    label_max = std::max(label_max, r.label);
    answer_max = std::max(answer_max, r.answer);
  }
  const std::size_t rows = static_cast<std::size_t>(label_max) + 1;
  const std::size_t cols = static_cast<std::size_t>(answer_max) + 1;
  std::vector<std::size_t> joint(rows * cols, 0);
  std::vector<std::size_t> row_sum(rows, 0), col_sum(cols, 0);
  for (const auto& r : records) {
    ++joint[static_cast<std::size_t>(r.label) * cols +
            static_cast<std::size_t>(r.answer)];
    ++row_sum[static_cast<std::size_t>(r.label)];
    ++col_sum[static_cast<std::size_t>(r.answer)];
  }
  const double n = static_cast<double>(records.size());
  double mi = 0.0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      const std::size_t c = joint[i * cols + j];
      if (c == 0) continue;
      const double p = static_cast<double>(c) / n;
      mi += p * std::log((n * static_cast<double>(c)) /
                         (static_cast<double>(row_sum[i]) *
                          static_cast<double>(col_sum[j])));
    }
  }
  if (!nats) mi /= std::log(2.0);
  return std::max(mi, 0.0);  // clip the tiny negatives rounding can produce
}

double itr(const std::vector<AnnotationRecord>& records, bool nats) {
  if (records.empty()) throw ConfigError("no annotation records");
  double total = 0.0;
  for (const auto& r : records) {
    if (!(r.seconds > 0.0)) {
      throw SchemaError("annotation times must be positive");
    }
    total += r.seconds;
  }
  const double mean_time = total / static_cast<double>(records.size());
  return mutual_information(records, nats) / mean_time;
}

}  // namespace textattr
