#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace textattr {

struct TokenizerOptions {
  // When true, words longer than chunk_len are cut into fixed-size chunks
  // ("wonderful", 4 -> "wond" "erfu" "l"). Chunks keep their word's index.
  bool subword = false;
  std::size_t chunk_len = 4;
};

struct RawToken {
  std::string text;       // lowercased surface form
  std::size_t begin = 0;  // byte span into the original text
  std::size_t end = 0;
  int word_index = 0;     // shared by chunks of the same word
  bool is_word = false;   // alphanumeric run vs single punctuation char
};

struct TokenRange {
  int begin = 0;  // token index, inclusive
  int end = 0;    // token index, exclusive
};

// Sentence-split exception list: lowercased words without the trailing period
// ("dr", "mr", "etc"). A terminator directly after one of these does not end
// the sentence.
class AbbrevSet {
 public:
  static AbbrevSet defaults();
  static AbbrevSet from_file(const std::string& path);
  void add(std::string word);
  bool contains(const std::string& word) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

std::vector<RawToken> tokenize_text(const std::string& text,
                                    const TokenizerOptions& options = {});

// Rule-based splitter over the token stream. Splits after . ! ? unless the
// next token is also a terminator (ellipses, "?!") or the preceding word is a
// known abbreviation. Always returns at least one range for non-empty input.
std::vector<TokenRange> sentencize(const std::vector<RawToken>& tokens,
                                   const AbbrevSet& abbrevs);

class Vocab {
 public:
  static constexpr int pad_id = 0;
  static constexpr int unk_id = 1;

  Vocab();
  int add(const std::string& token);           // returns new or existing id
  int id(const std::string& token) const;      // unk_id when absent
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;
  std::size_t size() const { return id_to_token_.size(); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, int> token_to_id_;
};

// Frequency-ranked vocabulary over the given token streams (train split
// only). Ties in frequency break lexicographically. max_size caps the number
// of kept content tokens; pad/unk ride on top.
Vocab build_vocab(const std::vector<std::vector<RawToken>>& docs,
                  std::size_t min_freq, std::size_t max_size);

struct Document {
  std::string id;
  std::string raw_text;
  std::vector<int> tokens;            // vocab ids, parallel to surface
  std::vector<RawToken> surface;      // spans + word indices
  std::vector<TokenRange> sentences;  // token ranges
  int label = -1;
};

enum class Granularity { token, word, sentence };

const char* granularity_name(Granularity g);
Granularity granularity_from_name(const std::string& name);

// Disjoint groups of token positions covering [0, T). Every token belongs to
// exactly one group; groups are ordered by first position.
struct Partition {
  Granularity granularity = Granularity::token;
  std::vector<std::vector<int>> groups;
};

Partition make_partition(const Document& doc, Granularity g);

enum class Split { train, val, test };

struct TextRecord {
  std::string id;
  std::string text;
  std::string label;  // raw; class mapping resolved corpus-wide
};

struct CorpusOptions {
  TokenizerOptions tokenizer;
  AbbrevSet abbreviations = AbbrevSet::defaults();
  std::size_t vocab_min_freq = 1;
  std::size_t vocab_max_size = 1000000;
};

struct Dataset {
  std::vector<Document> documents;  // original record order
  std::vector<Split> split_of;      // parallel to documents
  std::vector<std::size_t> train_indices;  // ascending document indices
  std::vector<std::size_t> val_indices;
  std::vector<std::size_t> test_indices;
  Vocab vocab;
  int class_count = 0;
  std::vector<std::string> class_names;
  TokenizerOptions tokenizer;
};

enum class DatasetFormat { jsonl, csv };

// Split sizes: test = floor(0.2 * N), then validation = floor(0.1 * rest),
// remainder train. Assignment shuffles record indices with the given seed.
// The vocabulary is built from the train split only.
Dataset assemble_dataset(const std::vector<TextRecord>& records,
                         const CorpusOptions& options, std::uint64_t seed);

std::vector<TextRecord> read_records(const std::string& path,
                                     DatasetFormat format);

Dataset load_dataset(const std::string& path, DatasetFormat format,
                     const CorpusOptions& options, std::uint64_t seed);

// Builds a single document against an existing vocabulary.
Document make_document(const std::string& id, const std::string& text,
                       const Vocab& vocab, const TokenizerOptions& options,
                       const AbbrevSet& abbrevs, int label = -1);

void save_vocab(const std::string& path, const Dataset& dataset);

// Restores vocab + tokenizer options + class names into an otherwise empty
// dataset shell (no documents) for standalone attribution runs.
Dataset load_vocab(const std::string& path);

}  // namespace textattr
