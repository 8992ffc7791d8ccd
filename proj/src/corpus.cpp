#include "textattr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "textattr/errors.hpp"
#include "textattr/rng.hpp"
#include "textattr/textio.hpp"

namespace textattr {

namespace {

// Bytes >= 0x80 (UTF-8 continuations and lead bytes) count as word
// characters so multibyte letters stay inside their word.
bool is_word_char(unsigned char c) {
  return std::isalnum(c) != 0 || c >= 0x80;
}

char lower_ascii(char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

std::string lower_copy(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = lower_ascii(c);
  return out;
}

bool is_terminator(const std::string& tok) {
  return tok == "." || tok == "!" || tok == "?";
}

// Full lowercased text of the word that token `idx` belongs to (joins chunks
// in subword mode).
std::string word_text_at(const std::vector<RawToken>& tokens, std::size_t idx) {
  int w = tokens[idx].word_index;
  std::size_t first = idx;
  while (first > 0 && tokens[first - 1].word_index == w) --first;
  std::string out;
  for (std::size_t i = first; i < tokens.size() && tokens[i].word_index == w;
       ++i) {
    out += tokens[i].text;
  }
  return out;
}

}  // namespace

AbbrevSet AbbrevSet::defaults() {
  AbbrevSet set;
  for (const char* w :
       {"dr", "mr", "mrs", "ms", "prof", "sr", "jr", "st", "vs", "etc", "eg",
        "ie", "inc", "ltd", "co", "corp", "dept", "est", "fig", "gen", "gov",
        "no", "vol", "approx"}) {
    set.add(w);
  }
  return set;
}

AbbrevSet AbbrevSet::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open abbreviation list: " + path);
  AbbrevSet set;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n' ||
                             line.back() == ' ' || line.back() == '\t')) {
      line.pop_back();
    }
    std::size_t start = line.find_first_not_of(" \t");
    if (start == std::string::npos) continue;
    line = line.substr(start);
    if (line[0] == '#') continue;
    if (line.back() == '.') line.pop_back();
    if (!line.empty()) set.add(lower_copy(line));
  }
  return set;
}

void AbbrevSet::add(std::string word) { words_.insert(std::move(word)); }

bool AbbrevSet::contains(const std::string& word) const {
  return words_.count(word) != 0;
}

std::vector<RawToken> tokenize_text(const std::string& text,
                                    const TokenizerOptions& options) {
  if (options.subword && options.chunk_len == 0) {
    throw ConfigError("subword chunk length must be positive");
  }
  std::vector<RawToken> tokens;
  int word_index = -1;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
      continue;
    }
    ++word_index;
    if (is_word_char(c)) {
      std::size_t j = i;
      while (j < n && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
      std::size_t len = j - i;
      if (options.subword && len > options.chunk_len) {
        for (std::size_t k = 0; k < len; k += options.chunk_len) {
          std::size_t piece = std::min(options.chunk_len, len - k);
          RawToken t;
          t.text = lower_copy(std::string_view(text).substr(i + k, piece));
          t.begin = i + k;
          t.end = i + k + piece;
          t.word_index = word_index;
          t.is_word = true;
          tokens.push_back(std::move(t));
        }
      } else {
        RawToken t;
        t.text = lower_copy(std::string_view(text).substr(i, len));
        t.begin = i;
        t.end = j;
        t.word_index = word_index;
        t.is_word = true;
        tokens.push_back(std::move(t));
      }
      i = j;
    } else {
      RawToken t;
      t.text.assign(1, text[i]);
      t.begin = i;
      t.end = i + 1;
      t.word_index = word_index;
      t.is_word = false;
      tokens.push_back(std::move(t));
      ++i;
    }
  }
  if (tokens.empty()) {
    throw SchemaError("text has no tokens");
  }
  return tokens;
}

std::vector<TokenRange> sentencize(const std::vector<RawToken>& tokens,
                                   const AbbrevSet& abbrevs) {
  std::vector<TokenRange> ranges;
  if (tokens.empty()) return ranges;
  int start = 0;
  const int n = static_cast<int>(tokens.size());
  for (int idx = 0; idx < n; ++idx) {
    if (tokens[idx].is_word || !is_terminator(tokens[idx].text)) continue;
    if (idx + 1 >= n) break;  // trailing terminator closes the last sentence
    if (!tokens[idx + 1].is_word && is_terminator(tokens[idx + 1].text)) {
      continue;  // run of terminators: split after the last one
    }
    if (idx > 0 && tokens[idx - 1].is_word &&
        abbrevs.contains(word_text_at(tokens, idx - 1))) {
      continue;
    }
    ranges.push_back({start, idx + 1});
    start = idx + 1;
  }
  ranges.push_back({start, n});
  return ranges;
}

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

int Vocab::add(const std::string& token) {
  auto it = token_to_id_.find(token);
  if (it != token_to_id_.end()) return it->second;
  int id = static_cast<int>(id_to_token_.size());
  id_to_token_.push_back(token);
  token_to_id_.emplace(token, id);
  return id;
}

int Vocab::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? unk_id : it->second;
}

const std::string& Vocab::token(int id) const {
  return id_to_token_.at(static_cast<std::size_t>(id));
}

bool Vocab::contains(const std::string& token) const {
  return token_to_id_.count(token) != 0;
}

Vocab build_vocab(const std::vector<std::vector<RawToken>>& docs,
                  std::size_t min_freq, std::size_t max_size) {
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& doc : docs) {
    for (const auto& tok : doc) ++counts[tok.text];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (auto& kv : counts) {
    if (kv.second >= min_freq) ranked.emplace_back(kv.first, kv.second);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > max_size) ranked.resize(max_size);
  Vocab vocab;
  for (const auto& kv : ranked) vocab.add(kv.first);
  return vocab;
}

const char* granularity_name(Granularity g) {
  switch (g) {
    case Granularity::token: return "token";
    case Granularity::word: return "word";
    case Granularity::sentence: return "sentence";
  }
  return "token";
}

Granularity granularity_from_name(const std::string& name) {
  if (name == "token") return Granularity::token;
  if (name == "word") return Granularity::word;
  if (name == "sentence") return Granularity::sentence;
  throw ConfigError("unknown granularity: " + name);
}

Partition make_partition(const Document& doc, Granularity g) {
  Partition p;
  p.granularity = g;
  const int n = static_cast<int>(doc.surface.size());
  switch (g) {
    case Granularity::token:
      for (int i = 0; i < n; ++i) p.groups.push_back({i});
      break;
    case Granularity::word: {
      for (int i = 0; i < n;) {
        int j = i;
        while (j < n && doc.surface[j].word_index == doc.surface[i].word_index)
          ++j;
        std::vector<int> group;
        for (int k = i; k < j; ++k) group.push_back(k);
        p.groups.push_back(std::move(group));
        i = j;
      }
      break;
    }
    case Granularity::sentence: {
      if (doc.sentences.empty() && n > 0) {
        throw SchemaError("document " + doc.id + " has no sentence boundaries");
      }
      for (const auto& r : doc.sentences) {
        std::vector<int> group;
        for (int k = r.begin; k < r.end; ++k) group.push_back(k);
        p.groups.push_back(std::move(group));
      }
      break;
    }
  }
  return p;
}

namespace {

std::vector<TextRecord> read_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<TextRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
    if (!j.is_object() || !j.contains("text") || !j.contains("label")) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": record needs text and label fields");
    }
    TextRecord rec;
    if (!j["text"].is_string()) {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": text must be a string");
    }
    rec.text = j["text"].get<std::string>();
    const auto& lab = j["label"];
    if (lab.is_string()) {
      rec.label = lab.get<std::string>();
    } else if (lab.is_number_integer()) {
      rec.label = std::to_string(lab.get<long long>());
    } else {
      throw SchemaError(path + ":" + std::to_string(line_no) +
                        ": label must be a string or integer");
    }
    if (j.contains("id")) {
      if (j["id"].is_string()) {
        rec.id = j["id"].get<std::string>();
      } else if (j["id"].is_number_integer()) {
        rec.id = std::to_string(j["id"].get<long long>());
      } else {
        throw SchemaError(path + ":" + std::to_string(line_no) +
                          ": id must be a string or integer");
      }
    } else {
      rec.id = "r" + std::to_string(line_no);
    }
    records.push_back(std::move(rec));
  }
  return records;
}

std::vector<TextRecord> read_csv_records(const std::string& path) {
  auto rows = parse_csv(read_file(path), path);
  if (rows.empty()) throw SchemaError(path + ": empty file");
  const auto& header = rows[0];
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  };
  int text_col = col("text");
  int label_col = col("label");
  int id_col = col("id");
  if (text_col < 0 || label_col < 0) {
    throw SchemaError(path + ": header must contain text and label columns");
  }
  std::vector<TextRecord> records;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::size_t needed = static_cast<std::size_t>(
        std::max(text_col, std::max(label_col, id_col)) + 1);
    if (row.size() < needed) {
      throw SchemaError(path + ": row " + std::to_string(r + 1) +
                        " has too few fields");
    }
    TextRecord rec;
    rec.text = row[static_cast<std::size_t>(text_col)];
    rec.label = row[static_cast<std::size_t>(label_col)];
    rec.id = id_col >= 0 ? row[static_cast<std::size_t>(id_col)]
                         : "r" + std::to_string(r);
    records.push_back(std::move(rec));
  }
  return records;
}

bool parse_int_label(const std::string& s, long long& out) {
  if (s.empty()) return false;
  std::size_t pos = s[0] == '-' ? 1 : 0;
  if (pos == s.size()) return false;
  for (std::size_t i = pos; i < s.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  out = std::stoll(s);
  return true;
}

}  // namespace

std::vector<TextRecord> read_records(const std::string& path,
                                     DatasetFormat format) {
  return format == DatasetFormat::jsonl ? read_jsonl(path)
                                        : read_csv_records(path);
}

Dataset assemble_dataset(const std::vector<TextRecord>& records,
                         const CorpusOptions& options, std::uint64_t seed) {
  if (records.empty()) throw SchemaError("dataset has no records");

  // Resolve the label space first: all-integer labels must form 0..K-1,
  // otherwise distinct strings are sorted and numbered.
  bool all_int = true;
  std::vector<long long> int_labels(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!parse_int_label(records[i].label, int_labels[i])) {
      all_int = false;
      break;
    }
  }
  std::vector<std::string> class_names;
  std::vector<int> labels(records.size());
  if (all_int) {
    long long max_label = -1;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (int_labels[i] < 0) {
        throw SchemaError("record " + records[i].id + ": negative label");
      }
      max_label = std::max(max_label, int_labels[i]);
    }
    std::vector<bool> seen(static_cast<std::size_t>(max_label) + 1, false);
    for (std::size_t i = 0; i < records.size(); ++i) {
      labels[i] = static_cast<int>(int_labels[i]);
      seen[static_cast<std::size_t>(int_labels[i])] = true;
    }
    for (std::size_t c = 0; c < seen.size(); ++c) {
      if (!seen[c]) {
        throw SchemaError("integer labels must be contiguous from 0; class " +
                          std::to_string(c) + " is missing");
      }
      class_names.push_back(std::to_string(c));
    }
  } else {
    std::vector<std::string> distinct;
    for (const auto& r : records) distinct.push_back(r.label);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()),
                   distinct.end());
    class_names = distinct;
    std::unordered_map<std::string, int> index;
    for (std::size_t i = 0; i < distinct.size(); ++i) {
      index[distinct[i]] = static_cast<int>(i);
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
      labels[i] = index[records[i].label];
    }
  }
  if (class_names.size() < 2) {
    throw SchemaError("dataset must contain at least two classes");
  }

  // Tokenize everything up front; ids are assigned after the vocab exists.
  std::vector<std::vector<RawToken>> raw(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    try {
      raw[i] = tokenize_text(records[i].text, options.tokenizer);
    } catch (const SchemaError&) {
      throw SchemaError("record " + records[i].id + ": text has no tokens");
    }
  }

  const std::size_t n = records.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);

  const std::size_t test_n = n / 5;  // floor(0.2 N)
  const std::size_t rest = n - test_n;
  const std::size_t val_n = rest / 10;  // floor(0.1 of the remainder)

  Dataset ds;
  ds.split_of.assign(n, Split::train);
  for (std::size_t k = 0; k < test_n; ++k) ds.split_of[order[k]] = Split::test;
  for (std::size_t k = test_n; k < test_n + val_n; ++k) {
    ds.split_of[order[k]] = Split::val;
  }
  for (std::size_t i = 0; i < n; ++i) {
    switch (ds.split_of[i]) {
      case Split::train: ds.train_indices.push_back(i); break;
      case Split::val: ds.val_indices.push_back(i); break;
      case Split::test: ds.test_indices.push_back(i); break;
    }
  }

  std::vector<std::vector<RawToken>> train_raw;
  for (std::size_t i : ds.train_indices) train_raw.push_back(raw[i]);
  ds.vocab =
      build_vocab(train_raw, options.vocab_min_freq, options.vocab_max_size);

  ds.documents.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    Document& doc = ds.documents[i];
    doc.id = records[i].id;
    doc.raw_text = records[i].text;
    doc.surface = std::move(raw[i]);
    doc.tokens.reserve(doc.surface.size());
    for (const auto& t : doc.surface) doc.tokens.push_back(ds.vocab.id(t.text));
    doc.sentences = sentencize(doc.surface, options.abbreviations);
    doc.label = labels[i];
  }
  ds.class_count = static_cast<int>(class_names.size());
  ds.class_names = std::move(class_names);
  ds.tokenizer = options.tokenizer;
  return ds;
}

Dataset load_dataset(const std::string& path, DatasetFormat format,
                     const CorpusOptions& options, std::uint64_t seed) {
  return assemble_dataset(read_records(path, format), options, seed);
}

Document make_document(const std::string& id, const std::string& text,
                       const Vocab& vocab, const TokenizerOptions& options,
                       const AbbrevSet& abbrevs, int label) {
  Document doc;
  doc.id = id;
  doc.raw_text = text;
  try {
    doc.surface = tokenize_text(text, options);
  } catch (const SchemaError&) {
    throw SchemaError("record " + id + ": text has no tokens");
  }
  doc.tokens.reserve(doc.surface.size());
  for (const auto& t : doc.surface) doc.tokens.push_back(vocab.id(t.text));
  doc.sentences = sentencize(doc.surface, abbrevs);
  doc.label = label;
  return doc;
}

void save_vocab(const std::string& path, const Dataset& dataset) {
  nlohmann::json j;
  j["tokens"] = dataset.vocab.tokens();
  j["subword"] = dataset.tokenizer.subword;
  j["chunk_len"] = dataset.tokenizer.chunk_len;
  j["class_names"] = dataset.class_names;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

Dataset load_vocab(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path + ": " + e.what());
  }
  Dataset ds;
  auto tokens = j.at("tokens").get<std::vector<std::string>>();
  if (tokens.size() < 2 || tokens[0] != "<pad>" || tokens[1] != "<unk>") {
    throw SchemaError(path + ": vocab must start with <pad>, <unk>");
  }
  for (std::size_t i = 2; i < tokens.size(); ++i) ds.vocab.add(tokens[i]);
  ds.tokenizer.subword = j.at("subword").get<bool>();
  ds.tokenizer.chunk_len = j.at("chunk_len").get<std::size_t>();
  ds.class_names = j.at("class_names").get<std::vector<std::string>>();
  ds.class_count = static_cast<int>(ds.class_names.size());
  return ds;
}

}  // namespace textattr
