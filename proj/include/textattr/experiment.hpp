#pragma once

#include <string>

#include "textattr/attribution.hpp"
#include "textattr/config.hpp"

namespace textattr {

// Loads the configured file corpus or generates the synthetic one.
Dataset dataset_from_config(const ExperimentConfig& config);

// Dispatch for one-off attribution requests: method is "shap", "shap_exact"
// or "ig". budget 0 picks the default for the feature count. Gradient
// attributions at word or sentence granularity are token-level runs
// aggregated into the coarser groups.
Attribution compute_attribution(const TextClassifier& model,
                                const Document& doc, const std::string& method,
                                Granularity granularity, std::size_t budget,
                                int steps, std::uint64_t seed);

// The full pipeline: build the corpus, train two models that differ only in
// their init seed plus a randomized-head control, attribute sampled test
// documents with every method family, and write all reports, checkpoints,
// attribution files and highlight pages under config.out_dir. A STALE marker
// file exists in the output directory while a run is incomplete.
void run_experiment(const ExperimentConfig& config);

}  // namespace textattr
