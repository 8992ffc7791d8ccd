#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "textattr/corpus.hpp"
#include "textattr/errors.hpp"
#include "textattr/synth.hpp"

using namespace textattr;

namespace {

SyntheticSpec tiny_spec() {
  SyntheticSpec spec;
  spec.doc_count = 60;
  spec.noise_rate = 0.0;
  spec.seed = 3;
  return spec;
}

std::vector<std::string> split_words(const std::string& sentence) {
  std::istringstream in(sentence);
  std::vector<std::string> out;
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

// Sentences of a generated text, terminator stripped.
std::vector<std::vector<std::string>> sentences_of(const std::string& text) {
  std::vector<std::vector<std::string>> out;
  std::string current;
  for (char c : text) {
    if (c == '.') {
      out.push_back(split_words(current));
      current.clear();
    } else {
      current += c;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("generator is deterministic per seed") {
  auto spec = tiny_spec();
  auto a = synth_records(spec);
  auto b = synth_records(spec);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].text == b[i].text);
    CHECK(a[i].label == b[i].label);
  }
  spec.seed = 4;
  auto c = synth_records(spec);
  bool any_differ = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].text != c[i].text) any_differ = true;
  }
  CHECK(any_differ);
}

TEST_CASE("documents follow the requested shape") {
  auto spec = tiny_spec();
  auto records = synth_records(spec);
  REQUIRE(records.size() == 60);
  for (const auto& r : records) {
    auto sentences = sentences_of(r.text);
    CHECK(sentences.size() >= static_cast<std::size_t>(spec.min_sentences));
    CHECK(sentences.size() <= static_cast<std::size_t>(spec.max_sentences));
    bool label_ok = r.label == "0" || r.label == "1";
    CHECK(label_ok);
    for (const auto& words : sentences) {
      CHECK(!words.empty());
    }
  }
}

TEST_CASE("every document plants exactly one signal sentence") {
  auto spec = tiny_spec();
  auto records = synth_records(spec);

  // signal vocabularies are disjoint per class; with zero noise the label
  // identifies the class, so collect per-class signal words first
  std::set<std::string> words_0, words_1;
  for (const auto& r : records) {
    auto sentences = sentences_of(r.text);
    for (const auto& words : sentences) {
      for (const auto& w : words) {
        (r.label == "0" ? words_0 : words_1).insert(w);
      }
    }
  }
  // shared filler words appear under both labels; signal words only in one
  std::set<std::string> only_0, only_1;
  for (const auto& w : words_0) {
    if (!words_1.count(w)) only_0.insert(w);
  }
  for (const auto& w : words_1) {
    if (!words_0.count(w)) only_1.insert(w);
  }
  CHECK(!only_0.empty());
  CHECK(!only_1.empty());

  for (const auto& r : records) {
    const auto& own = r.label == "0" ? only_0 : only_1;
    const auto& other = r.label == "0" ? only_1 : only_0;
    auto sentences = sentences_of(r.text);
    int pure_signal = 0;
    for (const auto& words : sentences) {
      int hits = 0;
      for (const auto& w : words) {
        CHECK(!other.count(w));  // the other class's words never leak in
        if (own.count(w)) ++hits;
      }
      if (hits == static_cast<int>(words.size())) {
        ++pure_signal;
        CHECK(words.size() >=
              static_cast<std::size_t>(spec.min_signal_words));
        CHECK(words.size() <=
              static_cast<std::size_t>(spec.max_signal_words));
      }
    }
    CHECK(pure_signal == 1);
  }
}

TEST_CASE("noise flips roughly the requested label share") {
  auto spec = tiny_spec();
  spec.doc_count = 2000;
  spec.noise_rate = 0.1;
  auto noisy = synth_records(spec);
  spec.noise_rate = 0.0;
  auto clean = synth_records(spec);
  int flipped = 0;
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    if (noisy[i].label != clean[i].label) ++flipped;
  }
  double rate = static_cast<double>(flipped) / 2000.0;
  CHECK(rate > 0.07);
  CHECK(rate < 0.13);
}

TEST_CASE("zero-noise corpora are linearly separable by keyword counts") {
  auto spec = tiny_spec();
  spec.doc_count = 200;
  auto records = synth_records(spec);
  auto ds = assemble_dataset(records, CorpusOptions{}, 11);

  // count signal words (per the disjointness construction) and classify
  std::set<std::string> words_0, words_1;
  for (const auto& r : records) {
    for (const auto& words : sentences_of(r.text)) {
      for (const auto& w : words) {
        (r.label == "0" ? words_0 : words_1).insert(w);
      }
    }
  }
  int correct = 0;
  for (const auto& r : records) {
    int score = 0;
    for (const auto& words : sentences_of(r.text)) {
      for (const auto& w : words) {
        bool in0 = words_0.count(w) && !words_1.count(w);
        bool in1 = words_1.count(w) && !words_0.count(w);
        score += in1 ? 1 : (in0 ? -1 : 0);
      }
    }
    int guess = score > 0 ? 1 : 0;
    if (std::to_string(guess) == r.label) ++correct;
  }
  CHECK(correct == 200);
  CHECK(ds.class_count == 2);
}

TEST_CASE("generator validates its spec") {
  auto spec = tiny_spec();
  spec.min_sentences = 1;  // too few for sentence-level attribution
  CHECK_THROWS_AS(synth_records(spec), ConfigError);

  spec = tiny_spec();
  spec.noise_rate = 1.0;
  CHECK_THROWS_AS(synth_records(spec), ConfigError);

  spec = tiny_spec();
  spec.max_signal_words = 2;  // below the minimum
  CHECK_THROWS_AS(synth_records(spec), ConfigError);

  spec = tiny_spec();
  spec.class_count = 1;
  CHECK_THROWS_AS(synth_records(spec), ConfigError);
}

TEST_CASE("generated ids are stable and unique") {
  auto records = synth_records(tiny_spec());
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.id);
  CHECK(ids.size() == records.size());
  CHECK(records[0].id == "synth-0");
}
