#include "textattr/synth.hpp"

#include <string>
#include <unordered_set>

#include "textattr/errors.hpp"
#include "textattr/rng.hpp"

namespace textattr {

namespace {

const char* kSyllables[] = {"ba", "ke", "mi", "ro", "tu", "sa", "lo", "ne",
                            "di", "fu", "pa", "vi", "zo", "ga", "ru", "we"};
constexpr std::size_t kSyllableCount = sizeof(kSyllables) / sizeof(char*);

std::string make_word(Rng& rng) {
  const int syllables = static_cast<int>(2 + rng.uniform_below(2));
  std::string word;
  for (int i = 0; i < syllables; ++i) {
    word += kSyllables[rng.uniform_below(kSyllableCount)];
  }
  return word;
}

std::vector<std::string> unique_words(Rng& rng, std::size_t count) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> words;
  words.reserve(count);
  while (words.size() < count) {
    std::string w = make_word(rng);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

}  // namespace

std::vector<TextRecord> synth_records(const SyntheticSpec& spec) {
  if (spec.doc_count == 0) throw ConfigError("doc_count must be positive");
  if (spec.class_count < 2) throw ConfigError("need at least two classes");
  if (spec.noise_rate < 0.0 || spec.noise_rate >= 1.0) {
    throw ConfigError("noise_rate must be in [0, 1)");
  }
  if (spec.min_sentences < 2 || spec.max_sentences < spec.min_sentences) {
    throw ConfigError("sentence count range is invalid (min >= 2)");
  }
  if (spec.min_signal_words < 1 ||
      spec.max_signal_words < spec.min_signal_words ||
      spec.min_filler_words < 1 ||
      spec.max_filler_words < spec.min_filler_words) {
    throw ConfigError("sentence length ranges are invalid");
  }
  if (spec.signal_vocab_per_class < 1 || spec.filler_vocab < 1) {
    throw ConfigError("vocabulary sizes must be positive");
  }

  Rng rng(spec.seed);
  const std::size_t classes = static_cast<std::size_t>(spec.class_count);
  std::vector<std::string> pool = unique_words(
      rng, classes * spec.signal_vocab_per_class + spec.filler_vocab);
  std::vector<std::vector<std::string>> signal(classes);
  std::size_t next = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < spec.signal_vocab_per_class; ++i) {
      signal[c].push_back(pool[next++]);
    }
  }
  std::vector<std::string> filler(pool.begin() + static_cast<long>(next),
                                  pool.end());

  auto sentence = [&](const std::vector<std::string>& words, int min_len,
                      int max_len) {
    const int len = static_cast<int>(rng.uniform_int(min_len, max_len));
    std::string out;
    for (int i = 0; i < len; ++i) {
      if (i > 0) out += ' ';
      out += words[rng.uniform_below(words.size())];
    }
    out += '.';
    return out;
  };

  std::vector<TextRecord> records;
  records.reserve(spec.doc_count);
  for (std::size_t d = 0; d < spec.doc_count; ++d) {
    const int true_class = static_cast<int>(rng.uniform_below(classes));
    const int n_sentences = static_cast<int>(
        rng.uniform_int(spec.min_sentences, spec.max_sentences));
    const int signal_at = static_cast<int>(
        rng.uniform_below(static_cast<std::uint64_t>(n_sentences)));

    std::string text;
    for (int s = 0; s < n_sentences; ++s) {
      if (s > 0) text += ' ';
      if (s == signal_at) {
        text += sentence(signal[static_cast<std::size_t>(true_class)],
                         spec.min_signal_words, spec.max_signal_words);
      } else {
        text += sentence(filler, spec.min_filler_words, spec.max_filler_words);
      }
    }

    int label = true_class;
    if (rng.uniform01() < spec.noise_rate) {
      label = static_cast<int>(
          (static_cast<std::size_t>(true_class) + 1 +
           rng.uniform_below(classes - 1)) %
          classes);
    }

    TextRecord rec;
    rec.id = "synth-" + std::to_string(d);
    rec.text = std::move(text);
    rec.label = std::to_string(label);
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace textattr
