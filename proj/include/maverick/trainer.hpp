#pragma once

#include "maverick/checkpoint.hpp"
#include "maverick/metrics.hpp"
#include "maverick/model.hpp"
#include "maverick/optimizer.hpp"

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace maverick {

// A source document prepared for the model: speaker prefixes inserted when
// configured, split into encoder-sized segments, tokens mapped to ids.
struct PreparedDoc {
  SpeakerInsertion speakers;
  std::vector<Segment> segments;             // segments of the augmented doc
  std::vector<std::vector<int>> segment_ids; // token ids per segment
};

inline PreparedDoc prepare_document(const Document& doc, const RunConfig& cfg,
                                    const Vocab& vocab, std::size_t source_index) {
  PreparedDoc out;
  if (cfg.speaker_prefix)
    out.speakers = insert_speakers_mapped(doc);
  else {
    out.speakers.augmented = doc;
    out.speakers.prefix_len.assign(static_cast<std::size_t>(doc.n_sentences()), 0);
    out.speakers.shift.assign(static_cast<std::size_t>(doc.n_sentences()), 0);
  }
  out.segments = split_document(out.speakers.augmented, cfg.max_len, source_index);
  for (const Segment& seg : out.segments) {
    std::vector<int> ids;
    ids.reserve(seg.doc.tokens.size());
    for (const std::string& t : seg.doc.tokens) ids.push_back(vocab.id_or_unk(t));
    out.segment_ids.push_back(std::move(ids));
  }
  return out;
}

struct DocPrediction {
  Clusters clusters;      // original-document token indices
  int flagged_spans = 0;  // predicted spans overlapping a speaker prefix
};

// Runs the pipeline per segment and maps spans back to the source document.
template <class S>
DocPrediction predict_document(const PreparedDoc& pd, const ModelParams<S>& params,
                               const RunConfig& cfg, const PronounLexicon& lexicon,
                               const PredictOptions& opts) {
  DocPrediction out;
  for (std::size_t k = 0; k < pd.segments.size(); ++k) {
    const Segment& seg = pd.segments[k];
    Clusters local = predict_segment(seg.doc, pd.segment_ids[k], params, cfg, lexicon, opts);
    for (Cluster& cluster : local) {
      Cluster mapped;
      for (Span sp : cluster) {
        Span aug{sp.start + seg.offset, sp.end + seg.offset};
        std::optional<Span> orig = pd.speakers.to_original(aug);
        if (!orig) {
          ++out.flagged_spans;
          continue;
        }
        mapped.push_back(*orig);
      }
      if (!mapped.empty() &&
          (opts.emit_singletons || mapped.size() > 1))
        out.clusters.push_back(std::move(mapped));
    }
  }
  return out;
}

// Corpus CoNLL-F1 of the model against the documents' gold clusters.
template <class S>
MetricReport evaluate_model(const std::vector<Document>& docs,
                            const std::vector<PreparedDoc>& prepared,
                            const ModelParams<S>& params, const RunConfig& cfg,
                            const PronounLexicon& lexicon, const PredictOptions& opts) {
  std::vector<Clusters> gold, pred;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    gold.push_back(normalize_clusters(docs[i].gold_clusters));
    pred.push_back(predict_document(prepared[i], params, cfg, lexicon, opts).clusters);
  }
  return evaluate_corpus(gold, pred);
}

// Run-time counterpart of evaluate_model for gold-mention clustering.
template <class S>
MetricReport evaluate_gold_mentions(const std::vector<Document>& docs,
                                    const std::vector<PreparedDoc>& prepared,
                                    const ModelParams<S>& params, const RunConfig& cfg,
                                    const PronounLexicon& lexicon, PredictOptions opts) {
  opts.gold_mentions = true;
  return evaluate_model(docs, prepared, params, cfg, lexicon, opts);
}

struct EpochLog {
  int epoch = 0;
  LossBreakdown loss;
  double dev_f1 = 0;
  bool is_best = false;
};

struct TrainResult {
  ModelParams<float> params;  // best by dev CoNLL-F1
  double best_f1 = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  std::vector<EpochLog> log;
};

// One optimizer update from a batch of prepared training segments
// (teacher-forced losses summed over the batch, clipped, Adam with per-group
// learning rates).
inline LossBreakdown train_step(const std::vector<const Segment*>& batch,
                                const std::vector<const std::vector<int>*>& batch_ids,
                                ModelParams<float>& params, AdamOptimizer<float>& adam,
                                const RunConfig& cfg, const EncoderConfig& enc_cfg,
                                const PronounLexicon& lexicon, double lr_scale) {
  LossBreakdown total;
  GradMap<float> grads;
  for (const auto& [name, value] : params.tensors)
    grads.emplace(name, MatF::Zero(value.rows(), value.cols()));

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Document& doc = batch[b]->doc;
    if (doc.n_tokens() == 0) continue;
    Tape<float> tape;
    Bound<float> bound{&tape, &params};
    DocLossVars<float> loss =
        doc_loss_on(tape, bound, doc, *batch_ids[b], cfg, enc_cfg, lexicon);
    const LossBreakdown parts = breakdown(loss);
    if (!std::isfinite(parts.l_total))
      fail("train: non-finite loss on document " + doc.doc_id);
    total += parts;
    for (auto& [name, g] : backward(tape, loss.total, bound)) grads.at(name) += g;
  }
  clip_grads(grads, cfg.grad_clip);
  adam.step(params, grads, cfg, lr_scale);
  return total;
}

// Full training loop: seeded shuffling, gradient accumulation, per-epoch
// validation on dev CoNLL-F1, best-checkpoint tracking and patience-based
// early stopping. `stop_at_dev_f1` ends training once the best dev score
// reaches the target (negative disables).
inline TrainResult train_model(const std::vector<Document>& train_docs,
                               const std::vector<Document>& dev_docs, RunConfig cfg,
                               const PronounLexicon& lexicon,
                               double stop_at_dev_f1 = -1.0,
                               std::ostream* log_stream = nullptr) {
  cfg.validate();
  check(!cfg.vocab.empty(), "train: config carries no vocabulary");
  const Vocab vocab(cfg.vocab);
  const EncoderConfig enc_cfg = encoder_config(cfg);

  std::vector<PreparedDoc> train_prep, dev_prep;
  std::vector<const Segment*> segments;
  std::vector<const std::vector<int>*> segment_ids;
  for (std::size_t i = 0; i < train_docs.size(); ++i) {
    validate_document(train_docs[i]);
    train_prep.push_back(prepare_document(train_docs[i], cfg, vocab, i));
  }
  for (const PreparedDoc& pd : train_prep)
    for (std::size_t k = 0; k < pd.segments.size(); ++k) {
      segments.push_back(&pd.segments[k]);
      segment_ids.push_back(&pd.segment_ids[k]);
    }
  for (std::size_t i = 0; i < dev_docs.size(); ++i) {
    validate_document(dev_docs[i]);
    dev_prep.push_back(prepare_document(dev_docs[i], cfg, vocab, i));
  }

  ModelParams<float> params = init_model_params<float>(cfg);
  AdamOptimizer<float> adam;
  const long steps_per_epoch =
      std::max<long>(1, (long(segments.size()) + cfg.grad_accum_steps - 1) /
                            cfg.grad_accum_steps);
  const long total_steps = steps_per_epoch * cfg.epochs;

  PredictOptions dev_opts{false, cfg.threshold, cfg.emit_singletons};
  TrainResult result;
  result.params = params;
  result.best_f1 = -1;
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  long step = 0;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(segments.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    LossBreakdown epoch_loss;
    for (std::size_t at = 0; at < order.size(); at += std::size_t(cfg.grad_accum_steps)) {
      std::vector<const Segment*> batch;
      std::vector<const std::vector<int>*> batch_ids;
      for (std::size_t b = at;
           b < std::min(order.size(), at + std::size_t(cfg.grad_accum_steps)); ++b) {
        batch.push_back(segments[order[b]]);
        batch_ids.push_back(segment_ids[order[b]]);
      }
      ++step;
      epoch_loss += train_step(batch, batch_ids, params, adam, cfg, enc_cfg, lexicon,
                               lr_schedule(step, total_steps, cfg.warmup_fraction));
    }

    const MetricReport dev =
        evaluate_model(dev_docs, dev_prep, params, cfg, lexicon, dev_opts);
    EpochLog entry{epoch, epoch_loss, dev.conll_f1, false};
    if (dev.conll_f1 > result.best_f1) {
      result.best_f1 = dev.conll_f1;
      result.best_epoch = epoch;
      result.params = params;
      entry.is_best = true;
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(entry);
    result.epochs_run = epoch;
    if (log_stream)
      (*log_stream) << "epoch " << epoch << " l_start " << entry.loss.l_start
                    << " l_end " << entry.loss.l_end << " l_clust " << entry.loss.l_clust
                    << " l_total " << entry.loss.l_total << " dev_conll_f1 "
                    << entry.dev_f1 << (entry.is_best ? " *best*" : "") << "\n";
    if (stop_at_dev_f1 >= 0 && result.best_f1 >= stop_at_dev_f1) break;
    if (since_best >= cfg.patience) break;
  }
  return result;
}

}  // namespace maverick
