#pragma once

#include <cstdint>
#include <vector>

#include "textattr/corpus.hpp"

namespace textattr {

// Pseudo-text corpus with a planted signal: every document contains exactly
// one sentence written in its class's private signal vocabulary, padded with
// longer filler sentences drawn from a shared pool. Labels are flipped with
// probability noise_rate.
struct SyntheticSpec {
  std::size_t doc_count = 2000;
  int class_count = 2;
  double noise_rate = 0.05;
  std::uint64_t seed = 7;
  int min_sentences = 3;
  int max_sentences = 4;
  int min_signal_words = 3;  // signal sentences are short
  int max_signal_words = 5;
  int min_filler_words = 20;  // filler sentences are long
  int max_filler_words = 30;
  std::size_t signal_vocab_per_class = 160;
  std::size_t filler_vocab = 64;
};

std::vector<TextRecord> synth_records(const SyntheticSpec& spec);

}  // namespace textattr
