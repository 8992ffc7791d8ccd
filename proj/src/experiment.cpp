#include "textattr/experiment.hpp"

#include <filesystem>
#include <iostream>

#include "json.hpp"
#include "textattr/annotations.hpp"
#include "textattr/errors.hpp"
#include "textattr/evaluation.hpp"
#include "textattr/highlight.hpp"
#include "textattr/report.hpp"
#include "textattr/rng.hpp"
#include "textattr/synth.hpp"
#include "textattr/textio.hpp"

namespace fs = std::filesystem;

namespace textattr {

Dataset dataset_from_config(const ExperimentConfig& config) {
  CorpusOptions options = corpus_options(config);
  if (config.dataset_path.empty()) {
    return assemble_dataset(synth_records(config.synth), options,
                            config.seed_split);
  }
  return load_dataset(config.dataset_path, config.dataset_format, options,
                      config.seed_split);
}

Attribution compute_attribution(const TextClassifier& model,
                                const Document& doc, const std::string& method,
                                Granularity granularity, std::size_t budget,
                                int steps, std::uint64_t seed) {
  Partition partition = make_partition(doc, granularity);
  if (method == "shap") {
    std::size_t b = budget ? budget : default_budget(partition.groups.size());
    return kernel_shap(model, doc, partition, b, seed);
  }
  if (method == "shap_exact") {
    return exact_shapley(model, doc, partition);
  }
  if (method == "ig") {
    Attribution token_attr = integrated_gradients(model, doc, steps);
    if (granularity == Granularity::token) return token_attr;
    return aggregate_indirect(token_attr, partition);
  }
  throw ConfigError("unknown method '" + method +
                    "' (expected shap, shap_exact or ig)");
}

namespace {

// Seed-mixing tags so every (document, model, method, run) gets its own
// stream.
constexpr std::uint64_t kTagD1 = 1, kTagD2 = 2, kTagR = 3;
constexpr std::uint64_t kTagShapToken = 1, kTagShapSentence = 2;

const char* kFamilies[3] = {"shap_direct", "shap_indirect", "ig_indirect"};

template <typename F>
void stage(const std::string& name, F&& body) {
  try {
    body();
  } catch (const Error& e) {
    throw Error(name + ": " + e.what());
  }
}

std::string sanitize_id(const std::string& id) {
  std::string out = id;
  for (char& c : out) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
    if (!ok) c = '_';
  }
  return out;
}

// Everything computed for one (model, document) pair.
struct DocAttrs {
  Attribution shap_token;
  Attribution shap_sentence;      // direct solve on the sentence partition
  Attribution ig_token;
  Attribution shap_sentence_agg;  // token values summed per sentence
  Attribution ig_sentence_agg;
};

DocAttrs attribute_document(const TextClassifier& model, const Document& doc,
                            const ExperimentConfig& config,
                            std::uint64_t model_tag, std::size_t doc_index) {
  Partition token_p = make_partition(doc, Granularity::token);
  Partition sent_p = make_partition(doc, Granularity::sentence);
  const std::size_t budget_t = config.shap_budget
                                   ? config.shap_budget
                                   : default_budget(token_p.groups.size());
  const std::size_t budget_s = config.shap_budget
                                   ? config.shap_budget
                                   : default_budget(sent_p.groups.size());
  DocAttrs a;
  a.shap_token = kernel_shap(
      model, doc, token_p, budget_t,
      mix_seed(config.seed_attribution, doc_index, model_tag, kTagShapToken, 0));
  a.shap_sentence = kernel_shap(model, doc, sent_p, budget_s,
                                mix_seed(config.seed_attribution, doc_index,
                                         model_tag, kTagShapSentence, 0));
  a.ig_token = integrated_gradients(model, doc, config.ig_steps);
  a.shap_sentence_agg = aggregate_indirect(a.shap_token, sent_p);
  a.ig_sentence_agg = aggregate_indirect(a.ig_token, sent_p);
  return a;
}

// family index -> (token, sentence) attributions of that family
std::pair<const Attribution*, const Attribution*> family_attrs(
    const DocAttrs& a, int family) {
  switch (family) {
    case 0: return {&a.shap_token, &a.shap_sentence};
    case 1: return {&a.shap_token, &a.shap_sentence_agg};
    default: return {&a.ig_token, &a.ig_sentence_agg};
  }
}

double prediction_agreement(const TextClassifier& a, const TextClassifier& b,
                            const Dataset& data,
                            const std::vector<std::size_t>& indices) {
  std::size_t same = 0;
  for (std::size_t i : indices) {
    const auto& tokens = data.documents[i].tokens;
    if (forward(a, tokens).predicted == forward(b, tokens).predicted) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(indices.size());
}

nlohmann::json train_report_json(const TrainReport& report) {
  nlohmann::json j;
  j["chosen_index"] = report.chosen_index;
  j["chosen_lr"] = report.chosen_lr;
  j["best_val_accuracy"] = report.best_val_accuracy;
  j["grid"] = nlohmann::json::array();
  for (const auto& p : report.grid) {
    nlohmann::json g;
    g["lr"] = p.lr;
    g["diverged"] = p.diverged;
    g["best_epoch"] = p.best_epoch;
    g["best_val_accuracy"] = p.best_val_accuracy;
    g["epochs"] = nlohmann::json::array();
    for (const auto& e : p.epochs) {
      g["epochs"].push_back(
          {{"train_loss", e.train_loss}, {"val_accuracy", e.val_accuracy}});
    }
    j["grid"].push_back(std::move(g));
  }
  return j;
}

std::string histogram_csv(const std::array<int, 21>& bins) {
  std::string csv = "bin,lo,hi,count\n";
  for (int b = 0; b < 21; ++b) {
    csv += csv_row({std::to_string(b),
                    format_double(static_cast<double>(b) / 21.0),
                    format_double(b == 20 ? 1.0 : (b + 1) / 21.0),
                    std::to_string(bins[static_cast<std::size_t>(b)])});
  }
  return csv;
}

void write_robustness(const std::string& dir, const std::string& test_name,
                      const std::string& family,
                      const RobustnessReport& report) {
  std::string csv = "doc_id,j_token,j_sentence,diff\n";
  for (const auto& row : report.rows) {
    csv += csv_row({row.doc_id, format_double(row.j_token),
                    format_double(row.j_sentence), format_double(row.diff)});
  }
  write_file(dir + "/robustness_" + test_name + "_" + family + ".csv", csv);
  write_file(dir + "/robustness_" + test_name + "_" + family + "_summary.json",
             robustness_summary_json(report));
  write_file(dir + "/hist_" + test_name + "_" + family + "_token.csv",
             histogram_csv(report.histogram_token));
  write_file(dir + "/hist_" + test_name + "_" + family + "_sentence.csv",
             histogram_csv(report.histogram_sentence));
}

}  // namespace

void run_experiment(const ExperimentConfig& config) {
  validate(config);

  const std::string out = config.out_dir;
  const std::string reports = out + "/reports";
  stage("setup", [&] {
    fs::create_directories(out);
    fs::create_directories(out + "/checkpoints");
    fs::create_directories(out + "/train");
    fs::create_directories(reports);
    fs::create_directories(out + "/attributions");
    fs::create_directories(out + "/highlights");
    write_file(out + "/STALE",
               "this run has not finished; outputs may be partial\n");
    write_file(out + "/config_snapshot.ini", config_snapshot(config));
  });

  Dataset data;
  stage("corpus", [&] {
    data = dataset_from_config(config);
    save_vocab(out + "/checkpoints/vocab.json", data);
    std::cout << "[corpus] documents=" << data.documents.size()
              << " vocab=" << data.vocab.size()
              << " train/val/test=" << data.train_indices.size() << "/"
              << data.val_indices.size() << "/" << data.test_indices.size()
              << "\n";
  });

  ModelArch arch;
  arch.vocab_size = static_cast<int>(data.vocab.size());
  arch.embed_dim = config.embed_dim;
  arch.hidden_dim = config.hidden_dim;
  arch.class_count = data.class_count;

  TrainConfig tc = config.train;
  tc.shuffle_seed = config.seed_shuffle;

  TextClassifier d1, d2, r;
  stage("train", [&] {
    auto [m1, rep1] = train(init_model(arch, config.seed_init_d1), data, tc);
    d1 = std::move(m1);
    write_file(out + "/train/d1_report.json",
               train_report_json(rep1).dump(2) + "\n");
    std::cout << "[train] d1: lr=" << rep1.chosen_lr
              << " val=" << rep1.best_val_accuracy << "\n";

    auto [m2, rep2] = train(init_model(arch, config.seed_init_d2), data, tc);
    d2 = std::move(m2);
    write_file(out + "/train/d2_report.json",
               train_report_json(rep2).dump(2) + "\n");
    std::cout << "[train] d2: lr=" << rep2.chosen_lr
              << " val=" << rep2.best_val_accuracy << "\n";

    r = randomize_head(d1, config.seed_head_r);

    save_checkpoint(out + "/checkpoints/d1.bin", d1);
    save_checkpoint(out + "/checkpoints/d2.bin", d2);
    save_checkpoint(out + "/checkpoints/r.bin", r);
  });

  stage("accuracy", [&] {
    std::string csv = "model,split,accuracy\n";
    const TextClassifier* models[3] = {&d1, &d2, &r};
    const char* names[3] = {"d1", "d2", "r"};
    const std::vector<std::size_t>* splits[3] = {
        &data.train_indices, &data.val_indices, &data.test_indices};
    const char* split_names[3] = {"train", "val", "test"};
    for (int m = 0; m < 3; ++m) {
      for (int s = 0; s < 3; ++s) {
        csv += csv_row({names[m], split_names[s],
                        format_double(accuracy(*models[m], data, *splits[s]))});
      }
    }
    write_file(reports + "/accuracy.csv", csv);

    const double agree_12 =
        prediction_agreement(d1, d2, data, data.test_indices);
    const double agree_1r = prediction_agreement(d1, r, data, data.test_indices);
    std::string agreement = "pair,agreement\n";
    agreement += csv_row({"d1_d2", format_double(agree_12)});
    agreement += csv_row({"d1_r", format_double(agree_1r)});
    write_file(reports + "/agreement.csv", agreement);
    std::cout << "[accuracy] test d1=" << accuracy(d1, data, data.test_indices)
              << " d2=" << accuracy(d2, data, data.test_indices)
              << " agreement d1/d2=" << agree_12 << "\n";
  });

  // Attribution studies run on test documents with at least two sentences.
  std::vector<std::size_t> sampled;
  stage("doc_sample", [&] {
    std::vector<std::size_t> eligible;
    for (std::size_t i : data.test_indices) {
      if (data.documents[i].sentences.size() >= 2) eligible.push_back(i);
    }
    if (eligible.empty()) {
      throw SchemaError(
          "no test document has two or more sentences; sentence-level "
          "attribution is impossible");
    }
    Rng rng(config.seed_doc_sample);
    rng.shuffle(eligible);
    const std::size_t take = std::min(config.eval_docs, eligible.size());
    sampled.assign(eligible.begin(),
                   eligible.begin() + static_cast<long>(take));

    std::string csv = "doc_id,tokens,sentences\n";
    for (std::size_t i : sampled) {
      const Document& doc = data.documents[i];
      csv += csv_row({doc.id, std::to_string(doc.tokens.size()),
                      std::to_string(doc.sentences.size())});
    }
    write_file(reports + "/sampled_docs.csv", csv);
    std::cout << "[doc_sample] " << sampled.size() << " documents\n";
  });

  // attrs[model][k] = attributions for sampled[k]
  std::vector<std::vector<DocAttrs>> attrs(3);
  stage("attribution", [&] {
    const TextClassifier* models[3] = {&d1, &d2, &r};
    const std::uint64_t tags[3] = {kTagD1, kTagD2, kTagR};
    for (int m = 0; m < 3; ++m) {
      attrs[static_cast<std::size_t>(m)].reserve(sampled.size());
      for (std::size_t k = 0; k < sampled.size(); ++k) {
        attrs[static_cast<std::size_t>(m)].push_back(
            attribute_document(*models[m], data.documents[sampled[k]], config,
                               tags[m], sampled[k]));
      }
    }

    const char* model_names[3] = {"d1", "d2", "r"};
    for (int m = 0; m < 3; ++m) {
      for (int f = 0; f < 3; ++f) {
        std::vector<Attribution> token_out, sent_out;
        for (const auto& da : attrs[static_cast<std::size_t>(m)]) {
          auto [tok, sent] = family_attrs(da, f);
          Attribution t = *tok;
          t.method = kFamilies[f];
          token_out.push_back(std::move(t));
          Attribution s = *sent;
          s.method = kFamilies[f];
          sent_out.push_back(std::move(s));
        }
        const std::string base = out + "/attributions/" +
                                 std::string(model_names[m]) + "_" +
                                 kFamilies[f];
        write_attributions_jsonl(base + "_token.jsonl", token_out);
        write_attributions_jsonl(base + "_sentence.jsonl", sent_out);
      }
    }
    std::cout << "[attribution] done\n";
  });

  stage("robustness", [&] {
    std::string table = "test,family,median_diff,compared,excluded,note\n";
    const char* note =
        "positive favors sentence granularity; negative favors token";
    for (int f = 0; f < 3; ++f) {
      for (int t = 0; t < 2; ++t) {
        const bool diffinit = (t == 0);
        const auto& b_side = diffinit ? attrs[1] : attrs[2];
        std::vector<AttributionQuad> quads;
        for (std::size_t k = 0; k < sampled.size(); ++k) {
          auto [a_tok, a_sent] = family_attrs(attrs[0][k], f);
          auto [b_tok, b_sent] = family_attrs(b_side[k], f);
          AttributionQuad q;
          q.doc_id = data.documents[sampled[k]].id;
          q.a_token = *a_tok;
          q.b_token = *b_tok;
          q.a_sentence = *a_sent;
          q.b_sentence = *b_sent;
          quads.push_back(std::move(q));
        }
        RobustnessReport report =
            diffinit ? diffinit_test(quads, config.k_percent)
                     : untrained_test(quads, config.k_percent);
        const std::string test_name = diffinit ? "diffinit" : "untrained";
        write_robustness(reports, test_name, kFamilies[f], report);
        table += csv_row({test_name, kFamilies[f],
                          format_double(report.median_diff),
                          std::to_string(report.rows.size()),
                          std::to_string(report.excluded), note});
        std::cout << "[robustness] " << test_name << " " << kFamilies[f]
                  << " median_diff=" << report.median_diff << " (n="
                  << report.rows.size() << ", excluded=" << report.excluded
                  << ")\n";
      }
    }
    write_file(reports + "/median_diff_table.csv", table);
  });

  stage("overlap", [&] {
    const std::size_t docs = std::min(config.overlap_docs, sampled.size());
    std::string csv = "doc_id,granularity,overlap\n";
    std::vector<double> token_vals, sent_vals;
    for (std::size_t k = 0; k < docs; ++k) {
      const Document& doc = data.documents[sampled[k]];
      Partition token_p = make_partition(doc, Granularity::token);
      Partition sent_p = make_partition(doc, Granularity::sentence);
      const std::size_t budget_t = config.shap_budget
                                       ? config.shap_budget
                                       : default_budget(token_p.groups.size());
      const std::size_t budget_s = config.shap_budget
                                       ? config.shap_budget
                                       : default_budget(sent_p.groups.size());
      std::vector<Attribution> token_runs, sent_runs;
      for (int run = 0; run < config.overlap_runs; ++run) {
        token_runs.push_back(
            kernel_shap(d1, doc, token_p, budget_t,
                        mix_seed(config.seed_attribution, sampled[k], kTagD1,
                                 kTagShapToken,
                                 static_cast<std::uint64_t>(run))));
        sent_runs.push_back(
            kernel_shap(d1, doc, sent_p, budget_s,
                        mix_seed(config.seed_attribution, sampled[k], kTagD1,
                                 kTagShapSentence,
                                 static_cast<std::uint64_t>(run))));
      }
      const double o_token = overlap(token_runs, config.k_percent);
      const double o_sent = overlap(sent_runs, config.k_percent);
      token_vals.push_back(o_token);
      sent_vals.push_back(o_sent);
      csv += csv_row({doc.id, "token", format_double(o_token)});
      csv += csv_row({doc.id, "sentence", format_double(o_sent)});
    }
    write_file(reports + "/overlap_shap_direct.csv", csv);
    nlohmann::json j;
    j["docs"] = docs;
    j["runs"] = config.overlap_runs;
    j["token_median"] = median(token_vals);
    j["sentence_median"] = median(sent_vals);
    write_file(reports + "/overlap_summary.json", j.dump(2) + "\n");
    std::cout << "[overlap] token=" << median(token_vals)
              << " sentence=" << median(sent_vals) << "\n";
  });

  stage("infidelity", [&] {
    nlohmann::json summary;
    for (int f = 0; f < 3; ++f) {
      for (int g = 0; g < 2; ++g) {
        const char* gran = g == 0 ? "token" : "sentence";
        std::string csv = "doc_id,percent,flipped\n";
        std::vector<double> percents;
        std::size_t never = 0;
        for (std::size_t k = 0; k < sampled.size(); ++k) {
          const Document& doc = data.documents[sampled[k]];
          auto [tok, sent] = family_attrs(attrs[0][k], f);
          const Attribution& attr = g == 0 ? *tok : *sent;
          InfidelityResult res = infidelity(d1, doc, attr);
          if (!res.flipped) ++never;
          percents.push_back(res.percent);
          csv += csv_row({doc.id, format_double(res.percent),
                          res.flipped ? "true" : "false"});
        }
        const std::string name =
            std::string(kFamilies[f]) + "_" + gran;
        write_file(reports + "/infidelity_" + name + ".csv", csv);
        summary[name] = {{"median_percent", median(percents)},
                         {"never_flipped", never},
                         {"docs", percents.size()}};
      }
    }
    write_file(reports + "/infidelity_summary.json", summary.dump(2) + "\n");
    std::cout << "[infidelity] done\n";
  });

  stage("highlights", [&] {
    const std::size_t docs = std::min(config.highlight_docs, sampled.size());
    for (std::size_t k = 0; k < docs; ++k) {
      const Document& doc = data.documents[sampled[k]];
      const DocAttrs& da = attrs[0][k];
      const std::string stem = out + "/highlights/" + sanitize_id(doc.id);
      HighlightSelection sel_t = select_highlight_tokens(
          doc, da.shap_token, config.highlight_budget_percent);
      write_file(stem + "_token.html",
                 render_highlight_html(doc, da.shap_token, sel_t));
      HighlightSelection sel_s = select_highlight_tokens(
          doc, da.shap_sentence, config.highlight_budget_percent);
      write_file(stem + "_sentence.html",
                 render_highlight_html(doc, da.shap_sentence, sel_s));
    }
    std::cout << "[highlights] " << docs << " documents\n";
  });

  stage("finish", [&] { fs::remove(out + "/STALE"); });
  std::cout << "[done] outputs in " << out << "\n";
}

}  // namespace textattr
