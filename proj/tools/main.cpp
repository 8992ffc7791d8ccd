#include <filesystem>
#include <iostream>
#include <unordered_map>

#include "CLI11.hpp"
#include "json.hpp"
#include "textattr/annotations.hpp"
#include "textattr/errors.hpp"
#include "textattr/evaluation.hpp"
#include "textattr/experiment.hpp"
#include "textattr/highlight.hpp"
#include "textattr/report.hpp"
#include "textattr/synth.hpp"
#include "textattr/textio.hpp"

namespace ta = textattr;

namespace {

ta::ExperimentConfig load_config(const std::string& config_path,
                                 const std::vector<std::string>& overrides) {
  ta::ExperimentConfig config;
  if (!config_path.empty()) config = ta::parse_config_file(config_path);
  for (const auto& o : overrides) ta::apply_override(config, o);
  return config;
}

// Shared flags for verbs that score a saved model against new text.
struct ModelInput {
  std::string checkpoint;
  std::string vocab;
  std::string text;
  std::string input_path;
  std::string doc_id = "doc";

  void add_flags(CLI::App* cmd) {
    cmd->add_option("--checkpoint", checkpoint, "model checkpoint (.bin)")
        ->required();
    cmd->add_option("--vocab", vocab, "vocab json written next to it")
        ->required();
    cmd->add_option("--text", text, "document text");
    cmd->add_option("--input", input_path, "file with the document text");
    cmd->add_option("--id", doc_id, "document id used in outputs");
  }

  std::pair<ta::TextClassifier, ta::Document> load() const {
    if (text.empty() == input_path.empty()) {
      throw ta::ConfigError("pass exactly one of --text or --input");
    }
    ta::TextClassifier model = ta::load_checkpoint(checkpoint);
    ta::Dataset shell = ta::load_vocab(vocab);
    if (static_cast<int>(shell.vocab.size()) != model.arch.vocab_size) {
      throw ta::ConfigError("vocab size does not match the checkpoint");
    }
    std::string body = text.empty() ? ta::read_file(input_path) : text;
    ta::Document doc =
        ta::make_document(doc_id, body, shell.vocab, shell.tokenizer,
                          ta::AbbrevSet::defaults());
    return {std::move(model), std::move(doc)};
  }
};

std::unordered_map<std::string, ta::Attribution> attr_index(
    const std::string& path) {
  std::unordered_map<std::string, ta::Attribution> index;
  for (auto& a : ta::read_attributions_jsonl(path)) {
    index[a.doc_id] = std::move(a);
  }
  return index;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attribution workbench for small text classifiers"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;

  // ---- run ----
  auto* run = app.add_subcommand("run", "full experiment pipeline");
  run->add_option("--config", config_path, "INI config file");
  run->add_option("--set", overrides, "override, e.g. seeds.split=7");
  run->callback([&] {
    ta::ExperimentConfig config = load_config(config_path, overrides);
    ta::run_experiment(config);
  });

  // ---- train ----
  auto* tr = app.add_subcommand("train", "train one model and save it");
  std::string train_out = "trained";
  tr->add_option("--config", config_path, "INI config file");
  tr->add_option("--set", overrides, "override, e.g. train.batch_size=16");
  tr->add_option("--out", train_out, "output directory");
  tr->callback([&] {
    ta::ExperimentConfig config = load_config(config_path, overrides);
    ta::validate(config);
    ta::Dataset data = ta::dataset_from_config(config);
    ta::ModelArch arch;
    arch.vocab_size = static_cast<int>(data.vocab.size());
    arch.embed_dim = config.embed_dim;
    arch.hidden_dim = config.hidden_dim;
    arch.class_count = data.class_count;
    ta::TrainConfig tc = config.train;
    tc.shuffle_seed = config.seed_shuffle;
    auto [model, report] =
        ta::train(ta::init_model(arch, config.seed_init_d1), data, tc);
    std::filesystem::create_directories(train_out);
    ta::save_checkpoint(train_out + "/model.bin", model);
    ta::save_vocab(train_out + "/vocab.json", data);
    nlohmann::json j;
    j["chosen_lr"] = report.chosen_lr;
    j["best_val_accuracy"] = report.best_val_accuracy;
    j["test_accuracy"] = ta::accuracy(model, data, data.test_indices);
    ta::write_file(train_out + "/train_report.json", j.dump(2) + "\n");
    std::cout << j.dump(2) << "\n";
  });

  // ---- attribute ----
  auto* at = app.add_subcommand("attribute", "attribute one document");
  ModelInput at_in;
  at_in.add_flags(at);
  std::string at_method = "shap";
  std::string at_gran = "token";
  std::size_t at_budget = 0;
  int at_steps = 300;
  std::uint64_t at_seed = 0;
  std::string at_out;
  at->add_option("--method", at_method, "shap | shap_exact | ig");
  at->add_option("--granularity", at_gran, "token | word | sentence");
  at->add_option("--budget", at_budget, "coalition budget (0 = 2M + 2048)");
  at->add_option("--steps", at_steps, "integration steps for ig");
  at->add_option("--seed", at_seed, "sampling seed");
  at->add_option("--out", at_out, "write the JSON line here instead of stdout");
  at->callback([&] {
    auto [model, doc] = at_in.load();
    ta::Attribution attr = ta::compute_attribution(
        model, doc, at_method, ta::granularity_from_name(at_gran), at_budget,
        at_steps, at_seed);
    std::string line = ta::attribution_to_json_line(attr);
    if (at_out.empty()) {
      std::cout << line << "\n";
    } else {
      ta::write_file(at_out, line + "\n");
    }
  });

  // ---- evaluate ----
  auto* ev = app.add_subcommand(
      "evaluate", "compare stored attributions from two models");
  std::string ev_a_token, ev_b_token, ev_a_sent, ev_b_sent, ev_csv;
  int ev_k = 25;
  ev->add_option("--a-token", ev_a_token, "model A token jsonl")->required();
  ev->add_option("--b-token", ev_b_token, "model B token jsonl")->required();
  ev->add_option("--a-sentence", ev_a_sent, "model A sentence jsonl")
      ->required();
  ev->add_option("--b-sentence", ev_b_sent, "model B sentence jsonl")
      ->required();
  ev->add_option("--k", ev_k, "top-K percent");
  ev->add_option("--csv", ev_csv, "write per-document rows here");
  ev->callback([&] {
    auto a_token = ta::read_attributions_jsonl(ev_a_token);
    auto b_token = attr_index(ev_b_token);
    auto a_sent = attr_index(ev_a_sent);
    auto b_sent = attr_index(ev_b_sent);
    std::vector<ta::AttributionQuad> quads;
    for (const auto& at_attr : a_token) {
      auto bt = b_token.find(at_attr.doc_id);
      auto as = a_sent.find(at_attr.doc_id);
      auto bs = b_sent.find(at_attr.doc_id);
      if (bt == b_token.end() || as == a_sent.end() || bs == b_sent.end()) {
        throw ta::SchemaError("document " + at_attr.doc_id +
                              " is missing from one of the files");
      }
      ta::AttributionQuad q;
      q.doc_id = at_attr.doc_id;
      q.a_token = at_attr;
      q.b_token = bt->second;
      q.a_sentence = as->second;
      q.b_sentence = bs->second;
      quads.push_back(std::move(q));
    }
    ta::RobustnessReport report = ta::diffinit_test(quads, ev_k);
    if (!ev_csv.empty()) {
      std::string csv = "doc_id,j_token,j_sentence,diff\n";
      for (const auto& row : report.rows) {
        csv += ta::csv_row({row.doc_id, ta::format_double(row.j_token),
                            ta::format_double(row.j_sentence),
                            ta::format_double(row.diff)});
      }
      ta::write_file(ev_csv, csv);
    }
    std::cout << ta::robustness_summary_json(report);
  });

  // ---- synth ----
  auto* sy = app.add_subcommand("synth", "generate the synthetic corpus");
  ta::SyntheticSpec spec;
  std::string sy_out;
  sy->add_option("--out", sy_out, "output jsonl path")->required();
  sy->add_option("--docs", spec.doc_count, "number of documents");
  sy->add_option("--classes", spec.class_count, "number of classes");
  sy->add_option("--noise", spec.noise_rate, "label flip probability");
  sy->add_option("--seed", spec.seed, "generator seed");
  sy->callback([&] {
    std::string out;
    for (const auto& rec : ta::synth_records(spec)) {
      nlohmann::json j;
      j["id"] = rec.id;
      j["text"] = rec.text;
      j["label"] = std::stoi(rec.label);
      out += j.dump();
      out += '\n';
    }
    ta::write_file(sy_out, out);
    std::cout << "wrote " << spec.doc_count << " records to " << sy_out
              << "\n";
  });

  // ---- highlight ----
  auto* hl = app.add_subcommand("highlight", "render one highlighted page");
  ModelInput hl_in;
  hl_in.add_flags(hl);
  std::string hl_method = "shap";
  std::string hl_gran = "token";
  std::size_t hl_budget = 0;
  int hl_steps = 300;
  std::uint64_t hl_seed = 0;
  int hl_percent = 10;
  std::string hl_out;
  hl->add_option("--method", hl_method, "shap | shap_exact | ig");
  hl->add_option("--granularity", hl_gran, "token | word | sentence");
  hl->add_option("--budget", hl_budget, "coalition budget (0 = 2M + 2048)");
  hl->add_option("--steps", hl_steps, "integration steps for ig");
  hl->add_option("--seed", hl_seed, "sampling seed");
  hl->add_option("--percent", hl_percent, "token budget percent");
  hl->add_option("--out", hl_out, "output html path")->required();
  hl->callback([&] {
    auto [model, doc] = hl_in.load();
    ta::Attribution attr = ta::compute_attribution(
        model, doc, hl_method, ta::granularity_from_name(hl_gran), hl_budget,
        hl_steps, hl_seed);
    ta::HighlightSelection sel =
        ta::select_highlight_tokens(doc, attr, hl_percent);
    ta::write_file(hl_out, ta::render_highlight_html(doc, attr, sel));
    std::cout << "highlighted " << sel.token_positions.size() << " of "
              << doc.tokens.size() << " tokens (budget " << sel.budget_tokens
              << ")\n";
  });

  // ---- itr ----
  auto* it = app.add_subcommand(
      "itr", "information transfer rate from an annotation log");
  std::string it_path;
  bool it_nats = false;
  it->add_option("--annotations", it_path, "csv with y,y_hat,time_seconds")
      ->required();
  it->add_flag("--nats", it_nats, "report nats instead of bits");
  it->callback([&] {
    auto records = ta::load_annotations(it_path);
    nlohmann::json j;
    j["records"] = records.size();
    j["unit"] = it_nats ? "nats" : "bits";
    j["mutual_information"] = ta::mutual_information(records, it_nats);
    j["itr_per_second"] = ta::itr(records, it_nats);
    std::cout << j.dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ta::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
