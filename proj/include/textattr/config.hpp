#pragma once

#include <cstdint>
#include <string>

#include "textattr/corpus.hpp"
#include "textattr/model.hpp"
#include "textattr/synth.hpp"

namespace textattr {

// Everything a full experiment run needs, read from an INI file with
// [section] headers and key = value lines. Defaults run the synthetic
// corpus end to end.
struct ExperimentConfig {
  // [dataset] file-backed corpora; an empty path selects the synthetic one
  std::string dataset_path;
  DatasetFormat dataset_format = DatasetFormat::jsonl;
  bool subword = false;
  std::size_t chunk_len = 4;
  std::size_t vocab_min_freq = 1;
  std::size_t vocab_max_size = 1000000;
  std::string abbrev_path;

  // [synthetic]
  SyntheticSpec synth;

  // [model]
  int embed_dim = 64;
  int hidden_dim = 64;

  // [train] (shuffle_seed is taken from [seeds] shuffle)
  TrainConfig train;

  // [seeds]
  std::uint64_t seed_split = 101;
  std::uint64_t seed_init_d1 = 11;
  std::uint64_t seed_init_d2 = 22;
  std::uint64_t seed_head_r = 33;
  std::uint64_t seed_attribution = 44;
  std::uint64_t seed_doc_sample = 55;
  std::uint64_t seed_shuffle = 66;

  // [attribution]
  std::size_t shap_budget = 0;  // 0 = 2M + 2048 per document
  int ig_steps = 300;

  // [evaluation]
  int k_percent = 25;
  int overlap_runs = 10;
  std::size_t overlap_docs = 20;
  std::size_t eval_docs = 100;
  std::size_t highlight_docs = 20;
  int highlight_budget_percent = 10;
  bool mi_nats = false;

  // [output]
  std::string out_dir = "out";
};

ExperimentConfig parse_config_file(const std::string& path);

// "section.key=value", the same keys the file accepts.
void apply_override(ExperimentConfig& config, const std::string& assignment);

void validate(const ExperimentConfig& config);

// Canonical INI text with every key, suitable for re-parsing.
std::string config_snapshot(const ExperimentConfig& config);

CorpusOptions corpus_options(const ExperimentConfig& config);

}  // namespace textattr
