#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "textattr/annotations.hpp"
#include "textattr/attribution.hpp"
#include "textattr/config.hpp"
#include "textattr/corpus.hpp"
#include "textattr/errors.hpp"
#include "textattr/experiment.hpp"
#include "textattr/model.hpp"
#include "textattr/report.hpp"
#include "textattr/textio.hpp"

using namespace textattr;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config(const std::string& out_dir) {
  ExperimentConfig config;
  config.synth.doc_count = 120;
  config.synth.min_sentences = 2;
  config.synth.max_sentences = 3;
  config.synth.min_filler_words = 4;
  config.synth.max_filler_words = 6;
  config.synth.signal_vocab_per_class = 8;
  config.synth.filler_vocab = 40;
  config.embed_dim = 8;
  config.hidden_dim = 8;
  config.train.lr_grid = {1e-2};
  config.train.max_epochs = 3;
  config.train.patience = 2;
  config.shap_budget = 40;
  config.ig_steps = 10;
  config.eval_docs = 6;
  config.overlap_runs = 3;
  config.overlap_docs = 2;
  config.highlight_docs = 2;
  config.out_dir = out_dir;
  return config;
}

std::map<fs::path, std::string> slurp_tree(const std::string& root) {
  std::map<fs::path, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), root)] = read_file(entry.path());
    }
  }
  return files;
}

std::string write_temp(const std::string& name, const std::string& body) {
  std::string path = "/tmp/textattr_pipe_" + name;
  std::ofstream f(path, std::ios::binary);
  f << body;
  return path;
}

Attribution sample_attr() {
  Attribution a;
  a.doc_id = "synth-3";
  a.method = "shap_direct";
  a.granularity = Granularity::sentence;
  a.seed = 987654321;
  a.budget_or_steps = 2054;
  a.target_class = 1;
  a.phi0 = -0.1240823;
  a.values = {0.25, -1.0 / 3.0, 4e-17, 12.5};
  return a;
}

}  // namespace

TEST_CASE("attribution json line round-trips exactly") {
  auto a = sample_attr();
  auto line = attribution_to_json_line(a);
  auto b = attribution_from_json_line(line);
  CHECK(b.doc_id == a.doc_id);
  CHECK(b.method == a.method);
  CHECK(b.granularity == a.granularity);
  CHECK(b.seed == a.seed);
  CHECK(b.budget_or_steps == a.budget_or_steps);
  CHECK(b.target_class == a.target_class);
  CHECK(b.phi0 == a.phi0);  // bit-exact through shortest-round-trip floats
  CHECK(b.values == a.values);
  // serialization is canonical: a second pass gives the same bytes
  CHECK(attribution_to_json_line(b) == line);
}

TEST_CASE("attribution files preserve order and length") {
  std::vector<Attribution> attrs(3, sample_attr());
  attrs[1].doc_id = "synth-7";
  attrs[1].values = {1.0};
  attrs[2].phi0 = 0.0;
  auto path = write_temp("attrs.jsonl", "");
  write_attributions_jsonl(path, attrs);
  auto loaded = read_attributions_jsonl(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[1].doc_id == "synth-7");
  CHECK(loaded[1].values == std::vector<double>{1.0});
  CHECK(loaded[2].phi0 == 0.0);
  fs::remove(path);
}

TEST_CASE("malformed attribution lines are rejected") {
  CHECK_THROWS_AS(attribution_from_json_line("{"), SchemaError);
  CHECK_THROWS_AS(attribution_from_json_line("{\"doc_id\": \"x\"}"),
                  SchemaError);
  CHECK_THROWS_AS(
      attribution_from_json_line(
          "{\"budget_or_steps\":1,\"doc_id\":\"d\",\"granularity\":\"nope\","
          "\"method\":\"m\",\"phi0\":0,\"seed\":0,\"target_class\":0,"
          "\"values\":[]}"),
      SchemaError);
}

TEST_CASE("config file parsing, overrides, and validation") {
  auto path = write_temp("config.ini",
                         "# comment\n"
                         "[synthetic]\n"
                         "docs = 300\n"
                         "noise = 0.1\n"
                         "[train]\n"
                         "lr_grid = 0.01, 0.001\n"
                         "max_epochs = 7\n"
                         "[seeds]\n"
                         "init_d1 = 5\n"
                         "init_d2 = 6\n"
                         "[output]\n"
                         "dir = /tmp/somewhere\n");
  auto config = parse_config_file(path);
  CHECK(config.synth.doc_count == 300);
  CHECK(config.synth.noise_rate == 0.1);
  CHECK(config.train.lr_grid == std::vector<double>{0.01, 0.001});
  CHECK(config.train.max_epochs == 7);
  CHECK(config.seed_init_d1 == 5);
  CHECK(config.out_dir == "/tmp/somewhere");

  apply_override(config, "synthetic.docs=500");
  CHECK(config.synth.doc_count == 500);
  CHECK_THROWS_AS(apply_override(config, "nosection.key=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(config, "synthetic.bogus=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(config, "not-an-assignment"), ConfigError);

  validate(config);
  config.seed_init_d2 = config.seed_init_d1;
  CHECK_THROWS_AS(validate(config), ConfigError);
  fs::remove(path);
}

TEST_CASE("config parse errors carry the line number") {
  auto path = write_temp("broken.ini", "[synthetic]\ndocs 300\n");
  try {
    parse_config_file(path);
    FAIL("expected a config error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find(":2") != std::string::npos);
  }
  fs::remove(path);
}

TEST_CASE("config snapshot re-parses to the same configuration") {
  auto config = tiny_config("/tmp/unused");
  config.train.lr_grid = {0.01, 0.0001};
  config.synth.noise_rate = 0.125;
  auto snapshot = config_snapshot(config);
  auto path = write_temp("snapshot.ini", snapshot);
  auto reparsed = parse_config_file(path);
  CHECK(config_snapshot(reparsed) == snapshot);
  CHECK(reparsed.train.lr_grid == config.train.lr_grid);
  CHECK(reparsed.synth.noise_rate == config.synth.noise_rate);
  CHECK(reparsed.out_dir == config.out_dir);
  fs::remove(path);
}

TEST_CASE("patience must stay below the epoch limit") {
  auto config = tiny_config("/tmp/unused");
  config.train.patience = config.train.max_epochs;
  CHECK_THROWS_AS(validate(config), ConfigError);
}

TEST_CASE("the pipeline writes the full output tree and clears the marker") {
  const std::string out = "/tmp/textattr_pipe_run1";
  fs::remove_all(out);
  auto config = tiny_config(out);
  run_experiment(config);

  CHECK(!fs::exists(out + "/STALE"));
  CHECK(fs::exists(out + "/config_snapshot.ini"));
  CHECK(fs::exists(out + "/checkpoints/d1.bin"));
  CHECK(fs::exists(out + "/checkpoints/d2.bin"));
  CHECK(fs::exists(out + "/checkpoints/r.bin"));
  CHECK(fs::exists(out + "/checkpoints/vocab.json"));
  CHECK(fs::exists(out + "/train/d1_report.json"));
  CHECK(fs::exists(out + "/train/d2_report.json"));
  CHECK(fs::exists(out + "/reports/accuracy.csv"));
  CHECK(fs::exists(out + "/reports/agreement.csv"));
  CHECK(fs::exists(out + "/reports/sampled_docs.csv"));
  CHECK(fs::exists(out + "/reports/median_diff_table.csv"));
  CHECK(fs::exists(out + "/reports/overlap_shap_direct.csv"));
  CHECK(fs::exists(out + "/reports/overlap_summary.json"));
  CHECK(fs::exists(out + "/reports/infidelity_summary.json"));
  for (const char* family :
       {"shap_direct", "shap_indirect", "ig_indirect"}) {
    for (const char* test : {"diffinit", "untrained"}) {
      auto base = out + "/reports/robustness_" + std::string(test) + "_" +
                  family;
      CHECK(fs::exists(base + ".csv"));
      CHECK(fs::exists(base + "_summary.json"));
    }
    for (const char* gran : {"token", "sentence"}) {
      CHECK(fs::exists(out + "/attributions/d1_" + std::string(family) +
                       "_" + gran + ".jsonl"));
      CHECK(fs::exists(out + "/reports/infidelity_" + std::string(family) +
                       "_" + gran + ".csv"));
    }
  }

  // attribution files parse and cover the sampled documents consistently
  auto direct = read_attributions_jsonl(out +
                                        "/attributions/d1_shap_direct_token.jsonl");
  auto indirect = read_attributions_jsonl(
      out + "/attributions/d1_shap_indirect_sentence.jsonl");
  CHECK(direct.size() == 6);
  CHECK(indirect.size() == 6);
  for (std::size_t i = 0; i < direct.size(); ++i) {
    CHECK(direct[i].doc_id == indirect[i].doc_id);
    CHECK(direct[i].method == "shap_direct");
    CHECK(indirect[i].method == "shap_indirect");
  }

  // csv headers match the documented schemas
  CHECK(read_file(out + "/reports/accuracy.csv").rfind(
            "model,split,accuracy\n", 0) == 0);
  CHECK(read_file(out + "/reports/agreement.csv").rfind("pair,agreement\n",
                                                        0) == 0);
  CHECK(read_file(out + "/reports/robustness_diffinit_shap_direct.csv")
            .rfind("doc_id,j_token,j_sentence,diff\n", 0) == 0);

  // histogram bin counts conserve the compared document total
  auto hist = read_file(out + "/reports/hist_diffinit_shap_direct_token.csv");
  std::istringstream in(hist);
  std::string line;
  std::getline(in, line);
  CHECK(line == "bin,lo,hi,count");
  int total = 0;
  while (std::getline(in, line)) {
    total += std::stoi(line.substr(line.rfind(',') + 1));
  }
  auto summary =
      read_file(out + "/reports/robustness_diffinit_shap_direct_summary.json");
  CHECK(summary.find("\"compared\": " + std::to_string(total)) !=
        std::string::npos);

  // two highlight pages per rendered document
  std::size_t pages = 0;
  for (const auto& entry : fs::directory_iterator(out + "/highlights")) {
    if (entry.path().extension() == ".html") ++pages;
  }
  CHECK(pages == 4);
}

TEST_CASE("rerunning the pipeline reproduces every byte") {
  const std::string out = "/tmp/textattr_pipe_rep";
  fs::remove_all(out);
  auto config = tiny_config(out);
  run_experiment(config);
  auto tree_a = slurp_tree(out);

  fs::remove_all(out);
  run_experiment(config);
  auto tree_b = slurp_tree(out);

  REQUIRE(tree_a.size() == tree_b.size());
  for (const auto& [path, bytes] : tree_a) {
    REQUIRE(tree_b.count(path) == 1);
    CHECK_MESSAGE(tree_b[path] == bytes, "differs: ", path.string());
  }
}

TEST_CASE("invalid configs are rejected before any stage runs") {
  auto config = tiny_config("/tmp/textattr_pipe_never");
  config.seed_init_d2 = config.seed_init_d1;
  CHECK_THROWS_AS(run_experiment(config), ConfigError);
  CHECK(!fs::exists("/tmp/textattr_pipe_never"));
}

TEST_CASE("a failing stage leaves the stale marker behind") {
  const std::string out = "/tmp/textattr_pipe_stale";
  fs::remove_all(out);
  auto config = tiny_config(out);
  config.train.lr_grid = {1e200};  // every grid entry diverges
  try {
    run_experiment(config);
    FAIL("expected the training stage to fail");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("train") != std::string::npos);
  }
  CHECK(fs::exists(out + "/STALE"));
  CHECK(fs::exists(out + "/config_snapshot.ini"));
  fs::remove_all(out);
}

TEST_CASE("compute_attribution dispatches on method and granularity") {
  std::vector<TextRecord> records;
  for (int i = 0; i < 10; ++i) {
    TextRecord r;
    r.id = "r" + std::to_string(i);
    r.text = (i % 2) ? "good fine show. nice one." : "bad poor show. sad one.";
    r.label = (i % 2) ? "pos" : "neg";
    records.push_back(r);
  }
  auto ds = assemble_dataset(records, CorpusOptions{}, 3);
  ModelArch arch;
  arch.vocab_size = static_cast<int>(ds.vocab.size());
  arch.embed_dim = 6;
  arch.hidden_dim = 8;
  arch.class_count = ds.class_count;
  auto model = init_model(arch, 42);
  const Document& doc = ds.documents[0];

  auto shap_t =
      compute_attribution(model, doc, "shap", Granularity::token, 0, 0, 9);
  CHECK(shap_t.method == "kernel_shap");
  CHECK(shap_t.values.size() == doc.tokens.size());
  CHECK(shap_t.budget_or_steps == default_budget(doc.tokens.size()));

  auto shap_s =
      compute_attribution(model, doc, "shap", Granularity::sentence, 0, 0, 9);
  CHECK(shap_s.values.size() == doc.sentences.size());

  auto exact =
      compute_attribution(model, doc, "shap_exact", Granularity::sentence, 0,
                          0, 9);
  CHECK(exact.method == "exact_shapley");
  REQUIRE(exact.values.size() == shap_s.values.size());
  // both sentence partitions are enumerable, so the estimates coincide
  for (std::size_t i = 0; i < exact.values.size(); ++i) {
    CHECK(shap_s.values[i] == doctest::Approx(exact.values[i]).epsilon(1e-9));
  }

  auto ig_t = compute_attribution(model, doc, "ig", Granularity::token, 0, 25,
                                  9);
  CHECK(ig_t.method == "integrated_gradients");
  CHECK(ig_t.values.size() == doc.tokens.size());
  auto ig_s = compute_attribution(model, doc, "ig", Granularity::sentence, 0,
                                  25, 9);
  REQUIRE(ig_s.values.size() == doc.sentences.size());
  double token_sum = 0.0, sent_sum = 0.0;
  for (double v : ig_t.values) token_sum += v;
  for (double v : ig_s.values) sent_sum += v;
  CHECK(sent_sum == doctest::Approx(token_sum).epsilon(1e-12));

  CHECK_THROWS_AS(compute_attribution(model, doc, "lime", Granularity::token,
                                      0, 0, 9),
                  ConfigError);
}

TEST_CASE("dataset_from_config reads file corpora") {
  auto path = write_temp(
      "corpus.jsonl",
      "{\"text\": \"alpha beta. gamma delta.\", \"label\": \"a\"}\n"
      "{\"text\": \"epsilon zeta. eta theta.\", \"label\": \"b\"}\n"
      "{\"text\": \"iota kappa. lambda mu.\", \"label\": \"a\"}\n"
      "{\"text\": \"nu xi. omicron pi.\", \"label\": \"b\"}\n"
      "{\"text\": \"rho sigma. tau upsilon.\", \"label\": \"a\"}\n");
  ExperimentConfig config;
  config.dataset_path = path;
  config.dataset_format = DatasetFormat::jsonl;
  auto ds = dataset_from_config(config);
  CHECK(ds.documents.size() == 5);
  CHECK(ds.class_count == 2);
  CHECK(ds.class_names == std::vector<std::string>{"a", "b"});
  fs::remove(path);
}

TEST_CASE("annotation csv ingestion validates rows") {
  auto path = write_temp("ann.csv",
                         "y,y_hat,time_seconds,notes\n"
                         "0,0,10,fine\n"
                         "1,1,10,\n"
                         "0,0,10,x\n"
                         "1,1,10,y\n");
  auto records = load_annotations(path);
  REQUIRE(records.size() == 4);
  CHECK(records[0].label == 0);
  CHECK(records[1].answer == 1);
  CHECK(records[2].seconds == 10.0);
  CHECK(itr(records) == doctest::Approx(0.1).epsilon(1e-12));
  fs::remove(path);

  auto missing = write_temp("ann_missing.csv", "y,time_seconds\n0,1\n");
  CHECK_THROWS_AS(load_annotations(missing), SchemaError);
  fs::remove(missing);

  auto bad_row = write_temp("ann_bad.csv",
                            "y,y_hat,time_seconds\n0,zero,1\n");
  try {
    load_annotations(bad_row);
    FAIL("expected a schema error");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  fs::remove(bad_row);

  auto empty = write_temp("ann_empty.csv", "y,y_hat,time_seconds\n");
  CHECK_THROWS_AS(load_annotations(empty), SchemaError);
  fs::remove(empty);
}

TEST_CASE("robustness summary json names all fields") {
  RobustnessReport report;
  report.rows.push_back({"d1", 0.5, 1.0, 0.5});
  report.median_diff = 0.5;
  report.excluded = 2;
  report.histogram_token[10] = 1;
  report.histogram_sentence[20] = 1;
  auto json = robustness_summary_json(report);
  CHECK(json.find("\"median_diff\": 0.5") != std::string::npos);
  CHECK(json.find("\"excluded\": 2") != std::string::npos);
  CHECK(json.find("\"compared\": 1") != std::string::npos);
  CHECK(json.find("histogram_token") != std::string::npos);
  CHECK(json.find("histogram_sentence") != std::string::npos);

  RobustnessReport empty;
  empty.median_diff = std::numeric_limits<double>::quiet_NaN();
  auto empty_json = robustness_summary_json(empty);
  CHECK(empty_json.find("\"median_diff\": null") != std::string::npos);
}
