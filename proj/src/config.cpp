#include "textattr/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "textattr/errors.hpp"
#include "textattr/textio.hpp"

namespace textattr {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(),
                                   out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" +
                      value + "'");
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  int out = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(),
                                   out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + value + "'");
}

std::vector<double> parse_double_list(const std::string& key,
                                      const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

void set_key(ExperimentConfig& c, const std::string& section,
             const std::string& key, const std::string& value) {
  const std::string full = section + "." + key;
  if (section == "dataset") {
    if (key == "path") c.dataset_path = value;
    else if (key == "format") {
      if (value == "jsonl") c.dataset_format = DatasetFormat::jsonl;
      else if (value == "csv") c.dataset_format = DatasetFormat::csv;
      else throw ConfigError(full + ": expected jsonl or csv");
    }
    else if (key == "subword") c.subword = parse_bool(full, value);
    else if (key == "chunk_len") c.chunk_len = parse_u64(full, value);
    else if (key == "vocab_min_freq") c.vocab_min_freq = parse_u64(full, value);
    else if (key == "vocab_max_size") c.vocab_max_size = parse_u64(full, value);
    else if (key == "abbreviations") c.abbrev_path = value;
    else throw ConfigError("unknown key " + full);
  } else if (section == "synthetic") {
    if (key == "docs") c.synth.doc_count = parse_u64(full, value);
    else if (key == "classes") c.synth.class_count = parse_int(full, value);
    else if (key == "noise") c.synth.noise_rate = parse_double(full, value);
    else if (key == "min_sentences") c.synth.min_sentences = parse_int(full, value);
    else if (key == "max_sentences") c.synth.max_sentences = parse_int(full, value);
    else if (key == "min_signal_words") c.synth.min_signal_words = parse_int(full, value);
    else if (key == "max_signal_words") c.synth.max_signal_words = parse_int(full, value);
    else if (key == "min_filler_words") c.synth.min_filler_words = parse_int(full, value);
    else if (key == "max_filler_words") c.synth.max_filler_words = parse_int(full, value);
    else if (key == "signal_vocab_per_class") c.synth.signal_vocab_per_class = parse_u64(full, value);
    else if (key == "filler_vocab") c.synth.filler_vocab = parse_u64(full, value);
    else throw ConfigError("unknown key " + full);
  } else if (section == "model") {
    if (key == "embed_dim") c.embed_dim = parse_int(full, value);
    else if (key == "hidden_dim") c.hidden_dim = parse_int(full, value);
    else throw ConfigError("unknown key " + full);
  } else if (section == "train") {
    if (key == "batch_size") c.train.batch_size = parse_int(full, value);
    else if (key == "max_epochs") c.train.max_epochs = parse_int(full, value);
    else if (key == "patience") c.train.patience = parse_int(full, value);
    else if (key == "weight_decay") c.train.weight_decay = parse_double(full, value);
    else if (key == "lr_grid") c.train.lr_grid = parse_double_list(full, value);
    else throw ConfigError("unknown key " + full);
  } else if (section == "seeds") {
    if (key == "split") c.seed_split = parse_u64(full, value);
    else if (key == "init_d1") c.seed_init_d1 = parse_u64(full, value);
    else if (key == "init_d2") c.seed_init_d2 = parse_u64(full, value);
    else if (key == "head_r") c.seed_head_r = parse_u64(full, value);
    else if (key == "attribution") c.seed_attribution = parse_u64(full, value);
    else if (key == "doc_sample") c.seed_doc_sample = parse_u64(full, value);
    else if (key == "shuffle") c.seed_shuffle = parse_u64(full, value);
    else if (key == "synth") c.synth.seed = parse_u64(full, value);
    else throw ConfigError("unknown key " + full);
  } else if (section == "attribution") {
    if (key == "shap_budget") c.shap_budget = parse_u64(full, value);
    else if (key == "ig_steps") c.ig_steps = parse_int(full, value);
    else throw ConfigError("unknown key " + full);
  } else if (section == "evaluation") {
    if (key == "k_percent") c.k_percent = parse_int(full, value);
    else if (key == "overlap_runs") c.overlap_runs = parse_int(full, value);
    else if (key == "overlap_docs") c.overlap_docs = parse_u64(full, value);
    else if (key == "eval_docs") c.eval_docs = parse_u64(full, value);
    else if (key == "highlight_docs") c.highlight_docs = parse_u64(full, value);
    else if (key == "highlight_budget_percent") c.highlight_budget_percent = parse_int(full, value);
    else if (key == "mi_nats") c.mi_nats = parse_bool(full, value);
    else throw ConfigError("unknown key " + full);
  } else if (section == "output") {
    if (key == "dir") c.out_dir = value;
    else throw ConfigError("unknown key " + full);
  } else {
    throw ConfigError("unknown section [" + section + "]");
  }
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  ExperimentConfig config;
  std::string line;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError(path + ":" + std::to_string(line_no) +
                          ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": expected key = value");
    }
    if (section.empty()) {
      throw ConfigError(path + ":" + std::to_string(line_no) +
                        ": key before any [section]");
    }
    set_key(config, section, trim(line.substr(0, eq)),
            trim(line.substr(eq + 1)));
  }
  return config;
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
  std::size_t eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like section.key=value: " +
                      assignment);
  }
  std::string key_path = trim(assignment.substr(0, eq));
  std::string value = trim(assignment.substr(eq + 1));
  std::size_t dot = key_path.find('.');
  if (dot == std::string::npos) {
    throw ConfigError("override must look like section.key=value: " +
                      assignment);
  }
  set_key(config, key_path.substr(0, dot), key_path.substr(dot + 1), value);
}

void validate(const ExperimentConfig& c) {
  if (c.seed_init_d1 == c.seed_init_d2) {
    throw ConfigError("seeds.init_d1 and seeds.init_d2 must differ");
  }
  if (c.train.patience >= c.train.max_epochs) {
    throw ConfigError("train.patience must be smaller than train.max_epochs");
  }
  if (c.train.patience < 1) throw ConfigError("train.patience must be >= 1");
  if (c.train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (c.train.lr_grid.empty()) throw ConfigError("train.lr_grid is empty");
  for (double lr : c.train.lr_grid) {
    if (!(lr > 0.0)) throw ConfigError("train.lr_grid entries must be > 0");
  }
  if (c.embed_dim < 1 || c.hidden_dim < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  if (c.k_percent < 1 || c.k_percent > 100) {
    throw ConfigError("evaluation.k_percent must be in [1, 100]");
  }
  if (c.highlight_budget_percent < 1 || c.highlight_budget_percent > 100) {
    throw ConfigError("evaluation.highlight_budget_percent must be in [1, 100]");
  }
  if (c.overlap_runs < 2) throw ConfigError("evaluation.overlap_runs must be >= 2");
  if (c.eval_docs < 1) throw ConfigError("evaluation.eval_docs must be >= 1");
  if (c.ig_steps < 1) throw ConfigError("attribution.ig_steps must be >= 1");
  if (c.subword && c.chunk_len < 1) {
    throw ConfigError("dataset.chunk_len must be >= 1");
  }
  if (c.dataset_path.empty()) {
    if (c.synth.class_count < 2) {
      throw ConfigError("synthetic.classes must be >= 2");
    }
    if (c.synth.noise_rate < 0.0 || c.synth.noise_rate >= 1.0) {
      throw ConfigError("synthetic.noise must be in [0, 1)");
    }
  }
  if (c.out_dir.empty()) throw ConfigError("output.dir must not be empty");
}

namespace {

std::string bool_str(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string config_snapshot(const ExperimentConfig& c) {
  std::string s;
  s += "[dataset]\n";
  s += "path = " + c.dataset_path + "\n";
  s += std::string("format = ") +
       (c.dataset_format == DatasetFormat::jsonl ? "jsonl" : "csv") + "\n";
  s += "subword = " + bool_str(c.subword) + "\n";
  s += "chunk_len = " + std::to_string(c.chunk_len) + "\n";
  s += "vocab_min_freq = " + std::to_string(c.vocab_min_freq) + "\n";
  s += "vocab_max_size = " + std::to_string(c.vocab_max_size) + "\n";
  s += "abbreviations = " + c.abbrev_path + "\n";
  s += "\n[synthetic]\n";
  s += "docs = " + std::to_string(c.synth.doc_count) + "\n";
  s += "classes = " + std::to_string(c.synth.class_count) + "\n";
  s += "noise = " + format_double(c.synth.noise_rate) + "\n";
  s += "min_sentences = " + std::to_string(c.synth.min_sentences) + "\n";
  s += "max_sentences = " + std::to_string(c.synth.max_sentences) + "\n";
  s += "min_signal_words = " + std::to_string(c.synth.min_signal_words) + "\n";
  s += "max_signal_words = " + std::to_string(c.synth.max_signal_words) + "\n";
  s += "min_filler_words = " + std::to_string(c.synth.min_filler_words) + "\n";
  s += "max_filler_words = " + std::to_string(c.synth.max_filler_words) + "\n";
  s += "signal_vocab_per_class = " +
       std::to_string(c.synth.signal_vocab_per_class) + "\n";
  s += "filler_vocab = " + std::to_string(c.synth.filler_vocab) + "\n";
  s += "\n[model]\n";
  s += "embed_dim = " + std::to_string(c.embed_dim) + "\n";
  s += "hidden_dim = " + std::to_string(c.hidden_dim) + "\n";
  s += "\n[train]\n";
  s += "batch_size = " + std::to_string(c.train.batch_size) + "\n";
  s += "max_epochs = " + std::to_string(c.train.max_epochs) + "\n";
  s += "patience = " + std::to_string(c.train.patience) + "\n";
  s += "weight_decay = " + format_double(c.train.weight_decay) + "\n";
  s += "lr_grid = ";
  for (std::size_t i = 0; i < c.train.lr_grid.size(); ++i) {
    if (i > 0) s += ",";
    s += format_double(c.train.lr_grid[i]);
  }
  s += "\n";
  s += "\n[seeds]\n";
  s += "split = " + std::to_string(c.seed_split) + "\n";
  s += "init_d1 = " + std::to_string(c.seed_init_d1) + "\n";
  s += "init_d2 = " + std::to_string(c.seed_init_d2) + "\n";
  s += "head_r = " + std::to_string(c.seed_head_r) + "\n";
  s += "attribution = " + std::to_string(c.seed_attribution) + "\n";
  s += "doc_sample = " + std::to_string(c.seed_doc_sample) + "\n";
  s += "shuffle = " + std::to_string(c.seed_shuffle) + "\n";
  s += "synth = " + std::to_string(c.synth.seed) + "\n";
  s += "\n[attribution]\n";
  s += "shap_budget = " + std::to_string(c.shap_budget) + "\n";
  s += "ig_steps = " + std::to_string(c.ig_steps) + "\n";
  s += "\n[evaluation]\n";
  s += "k_percent = " + std::to_string(c.k_percent) + "\n";
  s += "overlap_runs = " + std::to_string(c.overlap_runs) + "\n";
  s += "overlap_docs = " + std::to_string(c.overlap_docs) + "\n";
  s += "eval_docs = " + std::to_string(c.eval_docs) + "\n";
  s += "highlight_docs = " + std::to_string(c.highlight_docs) + "\n";
  s += "highlight_budget_percent = " +
       std::to_string(c.highlight_budget_percent) + "\n";
  s += "mi_nats = " + bool_str(c.mi_nats) + "\n";
  s += "\n[output]\n";
  s += "dir = " + c.out_dir + "\n";
  return s;
}

CorpusOptions corpus_options(const ExperimentConfig& config) {
  CorpusOptions options;
  options.tokenizer.subword = config.subword;
  options.tokenizer.chunk_len = config.chunk_len;
  options.vocab_min_freq = config.vocab_min_freq;
  options.vocab_max_size = config.vocab_max_size;
  options.abbreviations = config.abbrev_path.empty()
                              ? AbbrevSet::defaults()
                              : AbbrevSet::from_file(config.abbrev_path);
  return options;
}

}  // namespace textattr
