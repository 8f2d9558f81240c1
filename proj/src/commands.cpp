#include "maverick/commands.hpp"

#include "maverick/checkpoint.hpp"
#include "maverick/conll.hpp"
#include "maverick/extractor.hpp"
#include "maverick/jsonl.hpp"
#include "maverick/metrics.hpp"
#include "maverick/trainer.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace maverick {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  check(out.good(), "cannot open " + path + " for writing");
  out << content;
  check(out.good(), "write failure on " + path);
}

const PronounLexicon& lexicon_for(const RunConfig& cfg) {
  if (cfg.pronoun_lexicon.empty()) return PronounLexicon::builtin();
  static std::map<std::string, PronounLexicon> cache;
  auto it = cache.find(cfg.pronoun_lexicon);
  if (it == cache.end())
    it = cache.emplace(cfg.pronoun_lexicon, PronounLexicon::from_file(cfg.pronoun_lexicon))
             .first;
  return it->second;
}

void check_unique_doc_ids(const std::vector<Document>& docs, const std::string& path) {
  std::set<std::string> ids;
  for (const Document& d : docs)
    check(ids.insert(d.doc_id).second, path + ": duplicate doc_id " + d.doc_id);
}

}  // namespace

LoadedCorpus load_corpus(const std::string& path) {
  const std::string text = read_file(path);
  std::size_t at = text.find_first_not_of(" \t\r\n");
  LoadedCorpus out;
  if (at == std::string::npos) {
    // empty file: an empty corpus in CoNLL form by convention
    out.format = CorpusFormat::conll;
    return out;
  }
  if (text[at] == '{') {
    out.format = CorpusFormat::jsonl;
    out.docs = parse_jsonl_string(text);
  } else if (text.compare(at, 6, "#begin") == 0) {
    out.format = CorpusFormat::conll;
    out.docs = parse_conll_string(text);
  } else {
    fail(path + ": unrecognized corpus format (expected CoNLL or JSONL)");
  }
  check_unique_doc_ids(out.docs, path);
  return out;
}

std::string write_corpus(const std::vector<Document>& docs,
                         const std::vector<CorefPrediction>& predictions,
                         CorpusFormat format) {
  return format == CorpusFormat::conll ? write_conll(docs, predictions)
                                       : write_jsonl(docs, predictions);
}

void cmd_train(const TrainCliArgs& args, std::ostream& out) {
  RunConfig cfg = RunConfig::from_json_file(args.config_path);
  if (args.clusterer) cfg.clusterer = *args.clusterer;
  if (args.epochs) cfg.epochs = *args.epochs;
  if (args.seed) cfg.seed = *args.seed;
  cfg.validate();

  LoadedCorpus train = load_corpus(args.train_path);
  LoadedCorpus dev = load_corpus(args.dev_path);
  check(!train.docs.empty(), args.train_path + ": empty training corpus");
  for (const Document& d : train.docs) validate_document(d);
  for (const Document& d : dev.docs) validate_document(d);

  // The vocabulary sees the text exactly as the encoder will.
  std::vector<std::vector<std::string>> token_lists;
  for (const Document& d : train.docs)
    token_lists.push_back(cfg.speaker_prefix ? insert_speakers(d).tokens : d.tokens);
  cfg.vocab = Vocab::build(token_lists).tokens();

  const PronounLexicon& lexicon = lexicon_for(cfg);
  TrainResult result = train_model(train.docs, dev.docs, cfg, lexicon, -1.0, &out);
  save_checkpoint_file(args.out_path, result.params, cfg.to_json_string());
  out << "best dev_conll_f1 " << result.best_f1 << " at epoch " << result.best_epoch
      << "; saved " << args.out_path << "\n";
}

void cmd_predict(const PredictCliArgs& args, std::ostream& out) {
  Checkpoint ck = load_checkpoint_file(args.model_path);
  RunConfig cfg = RunConfig::from_json_string(ck.config_json);
  check(!cfg.vocab.empty(), args.model_path + ": checkpoint config has no vocabulary");
  validate_model_shapes(ck.params, cfg);
  const Vocab vocab(cfg.vocab);
  const PronounLexicon& lexicon = lexicon_for(cfg);

  PredictOptions opts;
  opts.gold_mentions = args.gold_mentions;
  opts.theta = args.threshold ? *args.threshold : cfg.threshold;
  check(opts.theta > 0.0 && opts.theta < 1.0, "predict: threshold must be in (0,1)");
  opts.emit_singletons = args.singletons || cfg.emit_singletons;

  LoadedCorpus corpus = load_corpus(args.input_path);
  std::vector<CorefPrediction> predictions;
  int flagged = 0;
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    validate_document(corpus.docs[i]);
    PreparedDoc pd = prepare_document(corpus.docs[i], cfg, vocab, i);
    DocPrediction dp = predict_document(pd, ck.params, cfg, lexicon, opts);
    flagged += dp.flagged_spans;
    predictions.push_back({corpus.docs[i].doc_id, std::move(dp.clusters)});
  }
  if (flagged > 0)
    std::cerr << "warning: dropped " << flagged
              << " predicted span(s) overlapping speaker prefixes\n";
  write_file(args.output_path, write_corpus(corpus.docs, predictions, corpus.format));
  out << "wrote predictions for " << corpus.docs.size() << " document(s) to "
      << args.output_path << "\n";
}

void cmd_evaluate(const std::string& gold_path, const std::string& pred_path,
                  std::ostream& out) {
  LoadedCorpus gold = load_corpus(gold_path);
  LoadedCorpus pred = load_corpus(pred_path);

  std::map<std::string, const Document*> by_id;
  for (const Document& d : pred.docs) by_id.emplace(d.doc_id, &d);
  std::vector<std::string> missing, extra;
  std::set<std::string> gold_ids;
  for (const Document& d : gold.docs) {
    gold_ids.insert(d.doc_id);
    if (!by_id.count(d.doc_id)) missing.push_back(d.doc_id);
  }
  for (const Document& d : pred.docs)
    if (!gold_ids.count(d.doc_id)) extra.push_back(d.doc_id);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "evaluate: document sets differ;";
    if (!missing.empty()) {
      msg += " missing from predictions:";
      for (const std::string& id : missing) msg += " " + id;
      msg += ";";
    }
    if (!extra.empty()) {
      msg += " unmatched in gold:";
      for (const std::string& id : extra) msg += " " + id;
    }
    fail(msg);
  }

  std::vector<Clusters> g, p;
  for (const Document& d : gold.docs) {
    g.push_back(normalize_clusters(d.gold_clusters));
    p.push_back(normalize_clusters(by_id.at(d.doc_id)->gold_clusters));
  }
  out << report_to_json(evaluate_corpus(g, p)) << "\n";
}

namespace {

std::string factor_str(std::int64_t baseline, std::int64_t ours) {
  if (ours == 0) return "n/a";
  char buf[64];
  std::snprintf(buf, sizeof buf, "-%.3fx", double(baseline) / double(ours));
  return buf;
}

}  // namespace

void cmd_stats(const StatsCliArgs& args, std::ostream& out) {
  LoadedCorpus corpus = load_corpus(args.input_path);
  for (const Document& d : corpus.docs) validate_document(d);

  std::optional<Checkpoint> ck;
  std::optional<RunConfig> cfg;
  std::optional<Vocab> vocab;
  if (args.model_path) {
    ck = load_checkpoint_file(*args.model_path);
    cfg = RunConfig::from_json_string(ck->config_json);
    check(!cfg->vocab.empty(), "stats: checkpoint config has no vocabulary");
    validate_model_shapes(ck->params, *cfg);
    vocab.emplace(cfg->vocab);
  }

  PipelineStats totals;
  out << "doc_id  n_tokens  enumeration  span_len_capped  start_end  eos_regularized"
         "  pairs_topk  pairs_pred_only\n";
  for (std::size_t i = 0; i < corpus.docs.size(); ++i) {
    const Document& doc = corpus.docs[i];
    PipelineStats st;
    int tokens = 0;
    if (ck) {
      PreparedDoc pd = prepare_document(doc, *cfg, *vocab, i);
      for (std::size_t k = 0; k < pd.segments.size(); ++k) {
        const Document& seg = pd.segments[k].doc;
        tokens += seg.n_tokens();
        if (seg.n_tokens() == 0) continue;
        EncoderOutput<float> hidden = encode(pd.segment_ids[k], ck->params,
                                             encoder_config(*cfg));
        VecX<float> ps = score_starts(hidden, ck->params);
        std::vector<int> starts;
        for (Index t = 0; t < ps.size(); ++t)
          if (double(ps(t)) > cfg->threshold) starts.push_back(static_cast<int>(t));
        const auto mentions = extract_mentions(seg, hidden, ck->params, cfg->threshold);
        st += pipeline_stats(seg, starts, mentions.size(), args.span_len_cap,
                             args.top_k_ratio);
      }
    } else {
      tokens = doc.n_tokens();
      const GoldMentions gold = gold_mentions(doc);
      st = pipeline_stats(doc, gold.distinct_starts(), gold.spans.size(),
                          args.span_len_cap, args.top_k_ratio);
    }
    totals += st;
    out << doc.doc_id << "  " << tokens << "  " << st.n_enumeration << "  "
        << st.n_span_len_capped << "  " << st.n_start_end << "  "
        << st.n_eos_regularized << "  " << st.n_pairs_topk << "  "
        << st.n_pairs_pred_only << "\n";
  }

  const std::size_t n_docs = corpus.docs.size();
  out << "\npipeline accounting, corpus totals over " << n_docs << " document(s)"
      << (ck ? " (predicted starts)" : " (gold starts)") << "\n";
  out << "                    coarse-to-fine            maverick                  reduction\n";
  char line[256];
  std::snprintf(line, sizeof line, "%-20s%-26s%-26s%s\n", "mention extraction",
                ("enumeration " + std::to_string(totals.n_enumeration)).c_str(),
                ("start-end " + std::to_string(totals.n_start_end)).c_str(),
                factor_str(totals.n_enumeration, totals.n_start_end).c_str());
  out << line;
  std::snprintf(line, sizeof line, "%-20s%-26s%-26s%s\n", " + regularization",
                ("span-length " + std::to_string(totals.n_span_len_capped)).c_str(),
                ("eos " + std::to_string(totals.n_eos_regularized)).c_str(),
                factor_str(totals.n_span_len_capped, totals.n_eos_regularized).c_str());
  out << line;
  std::snprintf(line, sizeof line, "%-20s%-26s%-26s%s\n", "mention clustering",
                ("top-k " + std::to_string(totals.n_pairs_topk)).c_str(),
                ("pred-only " + std::to_string(totals.n_pairs_pred_only)).c_str(),
                factor_str(totals.n_pairs_topk, totals.n_pairs_pred_only).c_str());
  out << line;
  if (n_docs > 0) {
    out << "\nper-document averages\n";
    auto avg = [n_docs](std::int64_t v) { return double(v) / double(n_docs); };
    std::snprintf(line, sizeof line,
                  "enumeration %.1f  span_len_capped %.1f  start_end %.1f  "
                  "eos_regularized %.1f  pairs_topk %.1f  pairs_pred_only %.1f\n",
                  avg(totals.n_enumeration), avg(totals.n_span_len_capped),
                  avg(totals.n_start_end), avg(totals.n_eos_regularized),
                  avg(totals.n_pairs_topk), avg(totals.n_pairs_pred_only));
    out << line;
  }
}

}  // namespace maverick
