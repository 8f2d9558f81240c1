#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maverick/commands.hpp"
#include "maverick/conll.hpp"
#include "maverick/jsonl.hpp"
#include "support/synth.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace maverick;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("coref_pipeline_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void put(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string train_config_json() {
  return R"({"d_model": 16, "layers": 1, "heads": 2, "max_len": 48,
             "d_hid": 16, "d_pair": 8, "clusterer": "s2e",
             "lr_heads": 3e-3, "lr_encoder": 3e-3,
             "epochs": 80, "seed": 11, "patience": 200,
             "emit_singletons": true})";
}

std::vector<Document> tiny_corpus() {
  Rng rng(314);
  synth::EntityCorpusOpts opts;
  opts.n_docs = 5;
  opts.mentions_min = 2;
  return synth::entity_docs(rng, opts);
}

// A trained tiny model shared by the predict/evaluate/stats cases.
struct TrainedFixture {
  TempDir dir;
  std::string model_path, input_path;
  std::vector<Document> docs;

  TrainedFixture() {
    docs = tiny_corpus();
    input_path = dir.file("corpus.jsonl");
    put(input_path, write_jsonl(docs));
    put(dir.file("cfg.json"), train_config_json());
    model_path = dir.file("model.mvk");
    std::ostringstream log;
    cmd_train({dir.file("cfg.json"), input_path, input_path, model_path, {}, {}, {}},
              log);
  }
};

TrainedFixture& trained() {
  static TrainedFixture fixture;
  return fixture;
}

}  // namespace

TEST_CASE("cmd_train writes a checkpoint and per-epoch logs") {
  TempDir dir;
  auto docs = tiny_corpus();
  put(dir.file("train.jsonl"), write_jsonl(docs));
  put(dir.file("cfg.json"), train_config_json());

  std::ostringstream log;
  cmd_train({dir.file("cfg.json"), dir.file("train.jsonl"), dir.file("train.jsonl"),
             dir.file("m.mvk"), {}, 3, {}},
            log);
  CHECK(fs::exists(dir.file("m.mvk")));
  const std::string text = log.str();
  CHECK(text.find("epoch 1 ") != std::string::npos);
  CHECK(text.find("epoch 3 ") != std::string::npos);
  CHECK(text.find("dev_conll_f1") != std::string::npos);
  CHECK(text.find("*best*") != std::string::npos);

  SUBCASE("epochs = 0 violates the config invariant") {
    std::ostringstream sink;
    CHECK_THROWS_WITH_AS(
        cmd_train({dir.file("cfg.json"), dir.file("train.jsonl"), dir.file("train.jsonl"),
                   dir.file("m2.mvk"), {}, 0, {}},
                  sink),
        doctest::Contains("epochs"), Error);
  }
  SUBCASE("unreadable config is a startup error") {
    std::ostringstream sink;
    CHECK_THROWS_AS(cmd_train({dir.file("nope.json"), dir.file("train.jsonl"),
                               dir.file("train.jsonl"), dir.file("m3.mvk"), {}, {}, {}},
                              sink),
                    Error);
  }
}

TEST_CASE("cmd_predict: empty input, gold mentions, format preservation") {
  TrainedFixture& f = trained();

  SUBCASE("empty input file gives empty output") {
    put(f.dir.file("empty.jsonl"), "");
    std::ostringstream log;
    cmd_predict({f.model_path, f.dir.file("empty.jsonl"), f.dir.file("out.jsonl"),
                 false, {}, false},
                log);
    CHECK(slurp(f.dir.file("out.jsonl")).empty());
  }
  SUBCASE("gold-mentions mode predicts only gold spans") {
    std::ostringstream log;
    cmd_predict({f.model_path, f.input_path, f.dir.file("goldm.jsonl"), true, {}, true},
                log);
    auto pred_docs = parse_jsonl_string(slurp(f.dir.file("goldm.jsonl")));
    REQUIRE(pred_docs.size() == f.docs.size());
    for (std::size_t i = 0; i < pred_docs.size(); ++i) {
      std::set<Span> gold;
      for (const Cluster& c : f.docs[i].gold_clusters) gold.insert(c.begin(), c.end());
      for (const Cluster& c : pred_docs[i].gold_clusters)
        for (const Span& s : c) CHECK(gold.count(s) == 1);
    }
  }
  SUBCASE("conll input yields conll output") {
    put(f.dir.file("corpus.conll"), write_conll(f.docs));
    std::ostringstream log;
    cmd_predict({f.model_path, f.dir.file("corpus.conll"), f.dir.file("out.conll"),
                 false, {}, true},
                log);
    const std::string out = slurp(f.dir.file("out.conll"));
    CHECK(out.rfind("#begin document", 0) == 0);
    CHECK_NOTHROW(parse_conll_string(out));
  }
}

TEST_CASE("predict then evaluate composes, and a trained model scores well") {
  TrainedFixture& f = trained();
  std::ostringstream log;
  cmd_predict({f.model_path, f.input_path, f.dir.file("pred.jsonl"), false, {}, true},
              log);

  std::ostringstream report;
  cmd_evaluate(f.input_path, f.dir.file("pred.jsonl"), report);
  const std::string json = report.str();
  CHECK(json.find("\"conll_f1\":") != std::string::npos);
  CHECK(json.find("\"mention\":") != std::string::npos);

  // the model overfits five documents; expect a solid score
  const std::size_t at = json.find("\"conll_f1\": ");
  const double f1 = std::stod(json.substr(at + 12));
  CHECK(f1 > 0.6);
}

TEST_CASE("cmd_evaluate oracle cases") {
  TempDir dir;
  Document doc;
  doc.doc_id = "w";
  doc.tokens = {"t0", "t1", "t2"};
  doc.sentence_ends = {2};
  doc.gold_clusters = {{{0, 0}, {1, 1}, {2, 2}}};
  put(dir.file("gold.jsonl"), write_jsonl({doc}));

  SUBCASE("identical files score 1") {
    std::ostringstream out;
    cmd_evaluate(dir.file("gold.jsonl"), dir.file("gold.jsonl"), out);
    CHECK(out.str().find("\"conll_f1\": 1.000000") != std::string::npos);
  }
  SUBCASE("the worked three-mention example scores 0.638095") {
    Document pred = doc;
    pred.gold_clusters = {{{0, 0}, {1, 1}}, {{2, 2}}};
    put(dir.file("pred.jsonl"), write_jsonl({pred}));
    std::ostringstream out;
    cmd_evaluate(dir.file("gold.jsonl"), dir.file("pred.jsonl"), out);
    CHECK(out.str().find("\"conll_f1\": 0.638095") != std::string::npos);
  }
  SUBCASE("a missing document is an error that names the offender") {
    put(dir.file("empty.jsonl"), "");
    CHECK_THROWS_WITH_AS(
        [&] {
          std::ostringstream out;
          cmd_evaluate(dir.file("gold.jsonl"), dir.file("empty.jsonl"), out);
        }(),
        doctest::Contains("w"), Error);
  }
}

TEST_CASE("cmd_stats prints the closed-form accounting") {
  TempDir dir;
  Document doc;
  doc.doc_id = "st";
  for (int i = 0; i < 10; ++i) doc.tokens.push_back("t" + std::to_string(i % 3));
  doc.sentence_ends = {4, 9};
  doc.gold_clusters = {{{0, 1}, {5, 5}}};  // gold starts 0 and 5
  put(dir.file("st.jsonl"), write_jsonl({doc}));

  std::ostringstream out;
  cmd_stats({dir.file("st.jsonl"), {}, 30, 0.4}, out);
  const std::string text = out.str();
  CHECK(text.find("st  10  55  55  15  10  6  1") != std::string::npos);
  CHECK(text.find("enumeration 55") != std::string::npos);
  CHECK(text.find("eos 10") != std::string::npos);
  // reduction factors to three decimals
  CHECK(text.find("-3.667x") != std::string::npos);  // 55 / 15
  CHECK(text.find("-5.500x") != std::string::npos);  // 55 / 10
  CHECK(text.find("-6.000x") != std::string::npos);  // 6 / 1
}

TEST_CASE("speaker prefixes and long documents flow through prediction") {
  TempDir dir;
  Rng rng(77);
  synth::RandomDocOpts opts;
  opts.min_sentences = 6;
  opts.max_sentences = 8;
  opts.min_sent_len = 6;
  opts.max_sent_len = 9;
  opts.speaker_prob = 1.0;
  auto docs = synth::random_docs(rng, 3, opts);
  put(dir.file("in.jsonl"), write_jsonl(docs));

  put(dir.file("cfg.json"),
      R"({"d_model": 16, "layers": 1, "heads": 2, "max_len": 24,
          "d_hid": 16, "d_pair": 8, "clusterer": "incr",
          "lr_heads": 3e-3, "lr_encoder": 3e-3,
          "epochs": 2, "seed": 5, "speaker_prefix": true,
          "emit_singletons": true})");
  std::ostringstream log;
  cmd_train({dir.file("cfg.json"), dir.file("in.jsonl"), dir.file("in.jsonl"),
             dir.file("m.mvk"), {}, {}, {}},
            log);
  cmd_predict({dir.file("m.mvk"), dir.file("in.jsonl"), dir.file("out.jsonl"), false,
               0.4, true},
              log);
  auto preds = parse_jsonl_string(slurp(dir.file("out.jsonl")));
  REQUIRE(preds.size() == docs.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(preds[i].tokens == docs[i].tokens);  // original text, not augmented
    CHECK_NOTHROW(validate_document(preds[i]));
  }
}

TEST_CASE("load_corpus format detection") {
  TempDir dir;
  put(dir.file("x.any"), "plain nonsense\n");
  CHECK_THROWS_WITH_AS(load_corpus(dir.file("x.any")),
                       doctest::Contains("unrecognized"), Error);
  put(dir.file("c"), "#begin document d\na   -\n#end document\n");
  CHECK(load_corpus(dir.file("c")).format == CorpusFormat::conll);
  put(dir.file("j"), R"({"doc_id": "d", "sentences": [["a"]], "clusters": []})" "\n");
  CHECK(load_corpus(dir.file("j")).format == CorpusFormat::jsonl);
  CHECK_THROWS_AS(load_corpus(dir.file("missing.txt")), Error);
}
