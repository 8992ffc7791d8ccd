#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "textattr/corpus.hpp"
#include "textattr/model.hpp"

namespace textattr {

// Additive feature attribution for one document: the explained scalar is the
// model's logit for target_class, and phi0 + sum(values) reconstructs it
// (exactly for the Shapley solvers, within quadrature error for gradients).
struct Attribution {
  std::string doc_id;
  std::string method;
  Granularity granularity = Granularity::token;
  std::uint64_t seed = 0;
  std::size_t budget_or_steps = 0;
  int target_class = 0;
  double phi0 = 0.0;
  std::vector<double> values;  // one per feature group, in group order
};

// Coalitions prepared for the kernel regression. `masks[k][i]` says whether
// feature i is present in coalition k. The all-present and all-absent
// coalitions are handled separately as constraints and never appear here.
struct CoalitionSample {
  std::vector<std::vector<bool>> masks;
  std::vector<double> weights;  // exact kernel weights when enumerated,
                                // duplicate-accumulated counts when sampled
  bool enumerated = false;
  std::size_t evaluations = 0;  // model calls this plan will cost, incl. the
                                // full and empty coalitions
};

// Default evaluation budget for m features.
std::size_t default_budget(std::size_t m);

// Shapley kernel weight for a coalition of size s out of m features.
double kernel_weight(std::size_t m, std::size_t s);

// Picks coalitions under the given evaluation budget. When the budget covers
// all 2^m coalitions they are enumerated with exact kernel weights and the
// regression recovers exact Shapley values. Otherwise a deterministic prefix
// (every singleton and every leave-one-out) is followed by complement pairs
// whose size is drawn with probability proportional to the kernel mass at
// that size; each drawn coalition then counts with unit weight.
CoalitionSample sample_coalitions(std::size_t m, std::size_t budget,
                                  std::uint64_t seed);

// Weighted least squares over sampled coalitions with two hard constraints:
// phi0 equals the score with everything masked, and the values sum to the
// full score minus phi0. Masking replaces every token of an absent group
// with the unknown token. The target class is the model's prediction on the
// unmasked document.
Attribution kernel_shap(const TextClassifier& model, const Document& doc,
                        const Partition& partition, std::size_t budget,
                        std::uint64_t seed);

// Exact Shapley values by full enumeration; feasible up to 20 feature groups.
Attribution exact_shapley(const TextClassifier& model, const Document& doc,
                          const Partition& partition);

// Exact Shapley values from a precomputed value table indexed by coalition
// bitmask (bit i set = feature i present). values.size() must be 2^m.
std::vector<double> shapley_from_values(const std::vector<double>& values,
                                        int m);

// Path integral of the class-score gradient from the all-unknown baseline to
// the embedded input, midpoint rule with n_steps points. Token granularity.
Attribution integrated_gradients(const TextClassifier& model,
                                 const Document& doc, int n_steps);

// Sums token-level values into the groups of a coarser partition.
Attribution aggregate_indirect(const Attribution& token_attr,
                               const Partition& partition);

// Averages token-level values within each word (a word split into chunks
// gets the mean of its chunk values). Result has word granularity.
Attribution merge_subwords(const Attribution& token_attr, const Document& doc);

}  // namespace textattr
