#pragma once

#include "maverick/config.hpp"
#include "maverick/document.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace maverick {

enum class CorpusFormat { conll, jsonl };

struct LoadedCorpus {
  std::vector<Document> docs;
  CorpusFormat format = CorpusFormat::conll;
};

// Detects the format from content: '#begin' -> CoNLL, '{' -> JSONL.
LoadedCorpus load_corpus(const std::string& path);

std::string write_corpus(const std::vector<Document>& docs,
                         const std::vector<CorefPrediction>& predictions,
                         CorpusFormat format);

struct TrainCliArgs {
  std::string config_path, train_path, dev_path, out_path;
  // optional overrides of the config file
  std::optional<std::string> clusterer;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
};

struct PredictCliArgs {
  std::string model_path, input_path, output_path;
  bool gold_mentions = false;
  std::optional<double> threshold;
  bool singletons = false;  // forces emit_singletons on
};

struct StatsCliArgs {
  std::string input_path;
  std::optional<std::string> model_path;
  int span_len_cap = 30;
  double top_k_ratio = 0.4;
};

void cmd_train(const TrainCliArgs& args, std::ostream& out);
void cmd_predict(const PredictCliArgs& args, std::ostream& out);
void cmd_evaluate(const std::string& gold_path, const std::string& pred_path,
                  std::ostream& out);
void cmd_stats(const StatsCliArgs& args, std::ostream& out);

}  // namespace maverick
