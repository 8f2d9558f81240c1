#include "maverick/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"coref: coreference resolution pipeline"};
  app.require_subcommand(1);

  maverick::TrainCliArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--config", train_args.config_path, "JSON run configuration")
      ->required();
  train->add_option("--train", train_args.train_path, "training corpus (CoNLL or JSONL)")
      ->required();
  train->add_option("--dev", train_args.dev_path, "validation corpus")->required();
  train->add_option("--out", train_args.out_path, "output checkpoint path")->required();
  std::string clusterer_override;
  int epochs_override = -1;
  std::int64_t seed_override = -1;
  train->add_option("--clusterer", clusterer_override, "override clusterer kind");
  train->add_option("--epochs", epochs_override, "override epoch count");
  train->add_option("--seed", seed_override, "override RNG seed");

  maverick::PredictCliArgs predict_args;
  double threshold_override = -1;
  CLI::App* predict = app.add_subcommand("predict", "predict coreference clusters");
  predict->add_option("--model", predict_args.model_path, "checkpoint")->required();
  predict->add_option("--input", predict_args.input_path, "input corpus")->required();
  predict->add_option("--output", predict_args.output_path, "output path")->required();
  predict->add_flag("--gold-mentions", predict_args.gold_mentions,
                    "cluster gold mention spans instead of extracted ones");
  predict->add_option("--threshold", threshold_override, "probability threshold");
  predict->add_flag("--singletons", predict_args.singletons, "emit singleton clusters");

  std::string gold_path, pred_path;
  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions against gold");
  evaluate->add_option("--gold", gold_path, "gold corpus")->required();
  evaluate->add_option("--pred", pred_path, "predicted corpus")->required();

  maverick::StatsCliArgs stats_args;
  std::string stats_model;
  CLI::App* stats = app.add_subcommand("stats", "candidate-pruning accounting");
  stats->add_option("--input", stats_args.input_path, "input corpus")->required();
  stats->add_option("--model", stats_model, "optional checkpoint for predicted starts");
  stats->add_option("--span-len-cap", stats_args.span_len_cap, "span length cap")
      ->default_val(30);
  stats->add_option("--top-k", stats_args.top_k_ratio, "top-k ratio")->default_val(0.4);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      if (!clusterer_override.empty()) train_args.clusterer = clusterer_override;
      if (epochs_override >= 0) train_args.epochs = epochs_override;
      if (seed_override >= 0) train_args.seed = static_cast<std::uint64_t>(seed_override);
      maverick::cmd_train(train_args, std::cout);
    } else if (predict->parsed()) {
      if (threshold_override >= 0) predict_args.threshold = threshold_override;
      maverick::cmd_predict(predict_args, std::cout);
    } else if (evaluate->parsed()) {
      maverick::cmd_evaluate(gold_path, pred_path, std::cout);
    } else if (stats->parsed()) {
      if (!stats_model.empty()) stats_args.model_path = stats_model;
      maverick::cmd_stats(stats_args, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
