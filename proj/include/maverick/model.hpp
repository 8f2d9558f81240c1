#pragma once

#include "maverick/losses.hpp"

#include <optional>
#include <vector>

namespace maverick {

inline EncoderConfig encoder_config(const RunConfig& cfg) {
  EncoderConfig e;
  e.vocab_size = static_cast<int>(cfg.vocab.size());
  e.d_model = cfg.d_model;
  e.layers = cfg.layers;
  e.heads = cfg.heads;
  e.max_len = cfg.max_len;
  return e;
}

// Fresh parameters for the configured encoder, extractor and clustering head,
// drawn deterministically from cfg.seed.
template <class S>
ModelParams<S> init_model_params(const RunConfig& cfg) {
  cfg.validate();
  check(!cfg.vocab.empty(), "init_model_params: config carries no vocabulary");
  Rng rng(cfg.seed);
  ModelParams<S> p;
  p.rng_seed = cfg.seed;
  init_encoder(p, encoder_config(cfg), rng);
  init_extractor(p, cfg.d_model, cfg.d_hid, rng);
  switch (clusterer_from_string(cfg.clusterer)) {
    case ClustererKind::s2e:
      init_s2e(p, cfg.d_model, cfg.d_hid, cfg.d_pair, rng);
      break;
    case ClustererKind::mes:
      init_mes(p, cfg.d_model, cfg.d_hid, cfg.d_pair, rng);
      break;
    case ClustererKind::incr:
      init_incr(p, cfg.d_model, cfg.d_hid, cfg.d_pair, rng);
      break;
  }
  return p;
}

// Shape check of a parameter set against a config; catches checkpoint/config
// mismatches on load.
template <class S>
void validate_model_shapes(const ModelParams<S>& params, const RunConfig& cfg) {
  const ModelParams<S> ref = init_model_params<S>(cfg);
  check(params.tensors.size() == ref.tensors.size(),
        "model: parameter set does not match config (count)");
  for (const auto& [name, m] : ref.tensors) {
    check(params.has(name), "model: missing parameter " + name);
    const MatX<S>& got = params.at(name);
    check(got.rows() == m.rows() && got.cols() == m.cols(),
          "model: dimension mismatch for " + name);
  }
}

struct PredictOptions {
  bool gold_mentions = false;
  double theta = 0.5;
  bool emit_singletons = false;
};

// Clusters for one encoded segment, as mention index lists over `spans`.
template <class S>
std::vector<std::vector<int>> cluster_spans_on(Tape<S>& tape, Bound<S>& P, Var<S> hidden,
                                               const Document& doc,
                                               const std::vector<Span>& spans,
                                               ClustererKind kind,
                                               const PronounLexicon& lexicon,
                                               double theta) {
  const int m = static_cast<int>(spans.size());
  if (m == 0) return {};
  if (m == 1) return {{0}};

  if (kind == ClustererKind::incr) {
    Var<S> reprs = mention_reprs_on(P, hidden, spans);
    ClusterState state;
    for (int i = 0; i < m; ++i) {
      auto score = [&](int c) {
        return static_cast<double>(
            incr_cluster_prob_on(tape, P, reprs, i, state.clusters[static_cast<std::size_t>(c)])
                .value()(0, 0));
      };
      state = incr_assign(i, score, state, theta);
    }
    state.validate(m);
    return state.clusters;
  }

  PairProbMatrix probs(m);
  if (kind == ClustererKind::s2e) {
    Var<S> p = s2e_pair_probs_on(P, hidden, spans);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j) probs.set(i, j, static_cast<double>(p.value()(i, j)));
  } else {
    const auto cats = pair_categories(doc, spans, lexicon);
    std::vector<Var<S>> per_cat = mes_pair_probs_on(P, hidden, spans);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j)
        probs.set(i, j, static_cast<double>(
                            per_cat[static_cast<int>(cats[i][j])].value()(i, j)));
  }
  return decode_antecedents(probs, theta);
}

// Full pipeline on one segment-local document: encode, extract (or take gold
// spans), cluster, apply the singleton policy.
template <class S>
Clusters predict_segment(const Document& doc, const std::vector<int>& ids,
                         const ModelParams<S>& params, const RunConfig& cfg,
                         const PronounLexicon& lexicon, const PredictOptions& opts) {
  if (doc.n_tokens() == 0) return {};
  Tape<S> tape;
  Bound<S> P{&tape, &params};
  Var<S> hidden = encode_on(tape, P, ids, encoder_config(cfg));

  std::vector<Span> spans;
  if (opts.gold_mentions) {
    spans = gold_mentions(doc).spans;
  } else {
    VecX<S> ps = start_probs_on(P, hidden).value().col(0);
    std::vector<double> p_start(ps.data(), ps.data() + ps.size());
    for (const MentionCandidate& c :
         extract_from_scores(p_start, doc.sentence_ends, opts.theta, [&](int s) {
           VecX<S> pe = end_probs_on(P, hidden, s, doc.sentence_ends).value().col(0);
           return std::vector<double>(pe.data(), pe.data() + pe.size());
         }))
      spans.push_back(c.span);
  }
  if (spans.empty()) return {};

  const auto index_clusters = cluster_spans_on(tape, P, hidden, doc, spans,
                                               clusterer_from_string(cfg.clusterer),
                                               lexicon, opts.theta);
  Clusters out;
  for (const auto& members :
       drop_singletons_if_configured(index_clusters, opts.emit_singletons)) {
    Cluster c;
    for (int m : members) c.push_back(spans[static_cast<std::size_t>(m)]);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace maverick
