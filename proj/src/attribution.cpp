#include "textattr/attribution.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "textattr/errors.hpp"
#include "textattr/rng.hpp"

namespace textattr {

std::size_t default_budget(std::size_t m) { return 2 * m + 2048; }

namespace {

// C(m, s) via the multiplicative recurrence; exact while products stay below
// 2^53, which covers every feasible enumeration size.
double binomial(std::size_t m, std::size_t s) {
  if (s > m) return 0.0;
  s = std::min(s, m - s);
  double c = 1.0;
  for (std::size_t i = 1; i <= s; ++i) {
    c = c * static_cast<double>(m - s + i) / static_cast<double>(i);
  }
  return c;
}

std::string mask_key(const std::vector<bool>& mask) {
  std::string key((mask.size() + 7) / 8, '\0');
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i]) key[i / 8] = static_cast<char>(key[i / 8] | (1 << (i % 8)));
  }
  return key;
}

void check_partition(const Partition& partition, std::size_t token_count) {
  std::vector<char> seen(token_count, 0);
  for (const auto& group : partition.groups) {
    if (group.empty()) throw SchemaError("partition contains an empty group");
    for (int pos : group) {
      if (pos < 0 || static_cast<std::size_t>(pos) >= token_count ||
          seen[static_cast<std::size_t>(pos)]) {
        throw SchemaError("partition does not tile the document");
      }
      seen[static_cast<std::size_t>(pos)] = 1;
    }
  }
  for (char c : seen) {
    if (!c) throw SchemaError("partition does not cover every token");
  }
}

// Scores coalitions by materializing the masked token sequence and running
// the ordinary forward pass, so results match public model behavior exactly.
class MaskedScorer {
 public:
  MaskedScorer(const TextClassifier& model, const Document& doc,
               const Partition& partition, int target_class)
      : model_(model),
        doc_(doc),
        partition_(partition),
        target_(target_class) {}

  double score(const std::vector<bool>& present) const {
    std::vector<int> tokens = doc_.tokens;
    for (std::size_t g = 0; g < partition_.groups.size(); ++g) {
      if (present[g]) continue;
      for (int pos : partition_.groups[g]) {
        tokens[static_cast<std::size_t>(pos)] = Vocab::unk_id;
      }
    }
    return forward(model_, tokens).logits(target_);
  }

  double score_all_masked() const {
    std::vector<int> tokens(doc_.tokens.size(), Vocab::unk_id);
    return forward(model_, tokens).logits(target_);
  }

 private:
  const TextClassifier& model_;
  const Document& doc_;
  const Partition& partition_;
  int target_;
};

}  // namespace

double kernel_weight(std::size_t m, std::size_t s) {
  if (m < 2 || s == 0 || s >= m) {
    throw ConfigError("kernel weight defined for 0 < s < m, m >= 2");
  }
  return static_cast<double>(m - 1) /
         (binomial(m, s) * static_cast<double>(s) *
          static_cast<double>(m - s));
}

CoalitionSample sample_coalitions(std::size_t m, std::size_t budget,
                                  std::uint64_t seed) {
  if (m < 1) throw ConfigError("need at least one feature");
  if (budget < m + 2) {
    throw ConfigError("budget " + std::to_string(budget) +
                      " too small for " + std::to_string(m) +
                      " features (needs at least m + 2)");
  }
  CoalitionSample sample;
  if (m == 1) {
    // Only the constraint coalitions exist; the single value is fixed by them.
    sample.enumerated = true;
    sample.evaluations = 2;
    return sample;
  }

  // Full enumeration when the budget covers every coalition (kept to table
  // sizes that fit comfortably in memory).
  if (m <= 22 && (std::uint64_t{1} << m) <= budget) {
    sample.enumerated = true;
    sample.evaluations = std::size_t{1} << m;
    const std::uint64_t full = (std::uint64_t{1} << m) - 1;
    sample.masks.reserve(sample.evaluations - 2);
    for (std::uint64_t bits = 1; bits < full; ++bits) {
      std::vector<bool> mask(m, false);
      std::size_t s = 0;
      for (std::size_t i = 0; i < m; ++i) {
        if (bits & (std::uint64_t{1} << i)) {
          mask[i] = true;
          ++s;
        }
      }
      sample.masks.push_back(std::move(mask));
      sample.weights.push_back(kernel_weight(m, s));
    }
    return sample;
  }

  // Sampling path: deterministic prefix, then complement pairs. Duplicates
  // fold into one row with accumulated weight; the budget counts draws, the
  // evaluations field counts distinct model calls.
  std::unordered_map<std::string, std::size_t> row_of;
  std::size_t drawn = 2;  // full + empty are always scored
  auto add_mask = [&](const std::vector<bool>& mask) {
    std::string key = mask_key(mask);
    auto it = row_of.find(key);
    if (it != row_of.end()) {
      sample.weights[it->second] += 1.0;
    } else {
      row_of.emplace(std::move(key), sample.masks.size());
      sample.masks.push_back(mask);
      sample.weights.push_back(1.0);
    }
    ++drawn;
  };

  std::vector<bool> mask(m);
  for (std::size_t i = 0; i < m && drawn < budget; ++i) {  // singletons
    std::fill(mask.begin(), mask.end(), false);
    mask[i] = true;
    add_mask(mask);
  }
  for (std::size_t i = 0; i < m && drawn < budget; ++i) {  // leave-one-outs
    std::fill(mask.begin(), mask.end(), true);
    mask[i] = false;
    add_mask(mask);
  }

  // Size distribution proportional to the kernel mass per size:
  // p(s) ~ (m-1) / (s (m-s)).
  std::vector<double> cumulative(m - 1);
  double total = 0.0;
  for (std::size_t s = 1; s < m; ++s) {
    total += 1.0 / (static_cast<double>(s) * static_cast<double>(m - s));
    cumulative[s - 1] = total;
  }

  Rng rng(seed);
  std::vector<std::size_t> indices(m);
  const std::size_t pairs = (budget - drawn) / 2;
  for (std::size_t p = 0; p < pairs; ++p) {
    const double u = rng.uniform01() * total;
    std::size_t s = 1 + static_cast<std::size_t>(
                            std::lower_bound(cumulative.begin(),
                                             cumulative.end(), u) -
                            cumulative.begin());
    s = std::min(s, m - 1);

    for (std::size_t i = 0; i < m; ++i) indices[i] = i;
    std::fill(mask.begin(), mask.end(), false);
    for (std::size_t k = 0; k < s; ++k) {  // partial Fisher-Yates
      std::size_t j = k + static_cast<std::size_t>(rng.uniform_below(m - k));
      std::swap(indices[k], indices[j]);
      mask[indices[k]] = true;
    }
    add_mask(mask);
    mask.flip();
    add_mask(mask);
  }
  sample.evaluations = sample.masks.size() + 2;
  return sample;
}

namespace {

Attribution solve_kernel_regression(const MaskedScorer& scorer,
                                    const CoalitionSample& sample,
                                    std::size_t m) {
  // phi0 is pinned to the all-masked score and the remaining values must sum
  // to full - phi0; the last feature is eliminated through that constraint.
  const double phi0 = scorer.score_all_masked();
  const double full = scorer.score(std::vector<bool>(m, true));
  const double delta = full - phi0;

  Attribution attr;
  attr.phi0 = phi0;

  if (m == 1) {
    attr.values = {delta};
    return attr;
  }

  const auto dim = static_cast<Eigen::Index>(m - 1);
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd atz = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd a(dim);
  for (std::size_t k = 0; k < sample.masks.size(); ++k) {
    const std::vector<bool>& mask = sample.masks[k];
    const double w = sample.weights[k];
    const double last = mask[m - 1] ? 1.0 : 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      a(static_cast<Eigen::Index>(i)) = (mask[i] ? 1.0 : 0.0) - last;
    }
    const double z = scorer.score(mask) - phi0 - last * delta;
    ata.noalias() += w * (a * a.transpose());
    atz.noalias() += (w * z) * a;
  }

  Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("kernel regression system is not solvable");
  }
  Eigen::VectorXd head = ldlt.solve(atz);
  if (!head.allFinite()) {
    throw NumericalError("kernel regression produced non-finite values");
  }

  attr.values.assign(m, 0.0);
  double head_sum = 0.0;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    attr.values[i] = head(static_cast<Eigen::Index>(i));
    head_sum += attr.values[i];
  }
  attr.values[m - 1] = delta - head_sum;
  return attr;
}

}  // namespace

Attribution kernel_shap(const TextClassifier& model, const Document& doc,
                        const Partition& partition, std::size_t budget,
                        std::uint64_t seed) {
  check_partition(partition, doc.tokens.size());
  const std::size_t m = partition.groups.size();
  CoalitionSample sample = sample_coalitions(m, budget, seed);

  const int target = forward(model, doc.tokens).predicted;
  MaskedScorer scorer(model, doc, partition, target);

  Attribution attr = solve_kernel_regression(scorer, sample, m);
  attr.doc_id = doc.id;
  attr.method = "kernel_shap";
  attr.granularity = partition.granularity;
  attr.seed = seed;
  attr.budget_or_steps = budget;
  attr.target_class = target;
  return attr;
}

std::vector<double> shapley_from_values(const std::vector<double>& values,
                                        int m) {
  if (m < 1 || m > 20) {
    throw ConfigError("exact Shapley supports 1 to 20 features");
  }
  const std::size_t count = std::size_t{1} << m;
  if (values.size() != count) {
    throw ConfigError("value table must have 2^m entries");
  }
  // Marginal-contribution weights: w[s] = 1 / (m * C(m-1, s)), where s is
  // the size of the coalition the feature joins.
  std::vector<double> weight(static_cast<std::size_t>(m));
  for (std::size_t s = 0; s < static_cast<std::size_t>(m); ++s) {
    weight[s] = 1.0 / (static_cast<double>(m) *
                       binomial(static_cast<std::size_t>(m - 1), s));
  }
  std::vector<double> phi(static_cast<std::size_t>(m), 0.0);
  for (std::size_t mask = 0; mask < count; ++mask) {
    const auto size = static_cast<std::size_t>(__builtin_popcountll(mask));
    for (int i = 0; i < m; ++i) {
      const std::size_t bit = std::size_t{1} << i;
      if (mask & bit) continue;
      phi[static_cast<std::size_t>(i)] +=
          weight[size] * (values[mask | bit] - values[mask]);
    }
  }
  return phi;
}

Attribution exact_shapley(const TextClassifier& model, const Document& doc,
                          const Partition& partition) {
  check_partition(partition, doc.tokens.size());
  const std::size_t m = partition.groups.size();
  if (m > 20) {
    throw ConfigError("exact Shapley limited to 20 feature groups, got " +
                      std::to_string(m));
  }
  const int target = forward(model, doc.tokens).predicted;
  MaskedScorer scorer(model, doc, partition, target);

  const std::size_t count = std::size_t{1} << m;
  std::vector<double> values(count);
  std::vector<bool> mask(m);
  for (std::size_t bits = 0; bits < count; ++bits) {
    for (std::size_t i = 0; i < m; ++i) mask[i] = (bits >> i) & 1;
    values[bits] = scorer.score(mask);
  }

  Attribution attr;
  attr.doc_id = doc.id;
  attr.method = "exact_shapley";
  attr.granularity = partition.granularity;
  attr.seed = 0;
  attr.budget_or_steps = count;
  attr.target_class = target;
  attr.phi0 = values[0];
  attr.values = shapley_from_values(values, static_cast<int>(m));
  return attr;
}

Attribution integrated_gradients(const TextClassifier& model,
                                 const Document& doc, int n_steps) {
  if (n_steps < 1) throw ConfigError("need at least one integration step");
  const int target = forward(model, doc.tokens).predicted;

  const Eigen::MatrixXd x = embed_tokens(model, doc.tokens);
  Eigen::MatrixXd baseline(x.rows(), x.cols());
  baseline.rowwise() = model.embedding.row(Vocab::unk_id);
  const Eigen::MatrixXd diff = x - baseline;

  Eigen::MatrixXd grad_sum = Eigen::MatrixXd::Zero(x.rows(), x.cols());
  for (int k = 1; k <= n_steps; ++k) {
    const double alpha = (static_cast<double>(k) - 0.5) /
                         static_cast<double>(n_steps);  // midpoint rule
    grad_sum += embedding_gradient(model, baseline + alpha * diff, target);
  }

  Attribution attr;
  attr.doc_id = doc.id;
  attr.method = "integrated_gradients";
  attr.granularity = Granularity::token;
  attr.seed = 0;
  attr.budget_or_steps = static_cast<std::size_t>(n_steps);
  attr.target_class = target;
  attr.phi0 = forward_embedded(model, baseline).logits(target);
  attr.values.resize(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    attr.values[static_cast<std::size_t>(t)] =
        (diff.row(t).array() * grad_sum.row(t).array()).sum() /
        static_cast<double>(n_steps);
  }
  return attr;
}

Attribution aggregate_indirect(const Attribution& token_attr,
                               const Partition& partition) {
  if (token_attr.granularity != Granularity::token) {
    throw ConfigError("indirect aggregation expects token-level input");
  }
  check_partition(partition, token_attr.values.size());
  Attribution attr = token_attr;
  attr.granularity = partition.granularity;
  attr.values.assign(partition.groups.size(), 0.0);
  for (std::size_t g = 0; g < partition.groups.size(); ++g) {
    for (int pos : partition.groups[g]) {
      attr.values[g] += token_attr.values[static_cast<std::size_t>(pos)];
    }
  }
  return attr;
}

Attribution merge_subwords(const Attribution& token_attr,
                           const Document& doc) {
  if (token_attr.granularity != Granularity::token) {
    throw ConfigError("subword merge expects token-level input");
  }
  if (token_attr.values.size() != doc.surface.size()) {
    throw SchemaError("attribution length does not match the document");
  }
  Partition words = make_partition(doc, Granularity::word);
  Attribution attr = token_attr;
  attr.granularity = Granularity::word;
  attr.values.assign(words.groups.size(), 0.0);
  for (std::size_t g = 0; g < words.groups.size(); ++g) {
    for (int pos : words.groups[g]) {
      attr.values[g] += token_attr.values[static_cast<std::size_t>(pos)];
    }
    attr.values[g] /= static_cast<double>(words.groups[g].size());
  }
  return attr;
}

}  // namespace textattr
