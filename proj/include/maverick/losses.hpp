#pragma once

#include "maverick/clusterers.hpp"
#include "maverick/config.hpp"
#include "maverick/extractor.hpp"

#include <map>
#include <set>
#include <vector>

namespace maverick {

// Gold mentions in (start, end) order with their cluster assignment.
struct GoldMentions {
  std::vector<Span> spans;
  std::vector<int> cluster_of;  // index into doc.gold_clusters

  std::vector<int> distinct_starts() const {
    std::vector<int> out;
    for (const Span& s : spans)
      if (out.empty() || out.back() != s.start) out.push_back(s.start);
    return out;
  }
};

inline GoldMentions gold_mentions(const Document& doc) {
  std::map<Span, int> by_span;
  for (std::size_t c = 0; c < doc.gold_clusters.size(); ++c)
    for (const Span& s : doc.gold_clusters[c]) by_span.emplace(s, static_cast<int>(c));
  GoldMentions g;
  for (const auto& [span, cluster] : by_span) {
    g.spans.push_back(span);
    g.cluster_of.push_back(cluster);
  }
  return g;
}

// ---- loss terms (sums of binary cross-entropies under teacher forcing) -------

// Per-token start loss: y_i = 1 iff some gold mention starts at token i.
template <class S>
Var<S> loss_start_on(Tape<S>& tape, Bound<S>& P, Var<S> hidden, const Document& doc,
                     const GoldMentions& gold) {
  if (doc.n_tokens() == 0) return tape.constant(MatX<S>::Zero(1, 1));
  Var<S> p = start_probs_on(P, hidden);
  MatX<S> labels = MatX<S>::Zero(doc.n_tokens(), 1);
  for (int s : gold.distinct_starts()) labels(s, 0) = S(1);
  return bce_sum(p, labels);
}

// End loss conditioned on gold starts only: for each gold start, one BCE term
// per candidate end in its sentence-bounded range.
template <class S>
Var<S> loss_end_on(Tape<S>& tape, Bound<S>& P, Var<S> hidden, const Document& doc,
                   const GoldMentions& gold) {
  const std::vector<int> starts = gold.distinct_starts();
  if (starts.empty()) return tape.constant(MatX<S>::Zero(1, 1));

  std::set<Span> gold_set(gold.spans.begin(), gold.spans.end());
  std::vector<Var<S>> prob_blocks;
  std::vector<S> labels;
  for (int s : starts) {
    prob_blocks.push_back(end_probs_on(P, hidden, s, doc.sentence_ends));
    const auto [lo, hi] = candidate_end_range(s, doc.sentence_ends);
    for (int e = lo; e <= hi; ++e)
      labels.push_back(gold_set.count({s, e}) ? S(1) : S(0));
  }
  Var<S> p = concat_rows(prob_blocks);
  MatX<S> y(static_cast<Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), 0) = labels[i];
  return bce_sum(p, y);
}

// Mention-antecedent loss over gold mentions: BCE on every ordered pair
// (j < i), label 1 iff both sit in the same gold cluster.
template <class S>
Var<S> loss_clust_ant_on(Tape<S>& tape, Bound<S>& P, Var<S> hidden, const Document& doc,
                         const GoldMentions& gold, ClustererKind kind,
                         const PronounLexicon& lexicon) {
  const int m = static_cast<int>(gold.spans.size());
  if (m < 2) return tape.constant(MatX<S>::Zero(1, 1));

  MatX<S> labels = MatX<S>::Zero(m, m);
  MatX<S> lower = MatX<S>::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < i; ++j) {
      lower(i, j) = S(1);
      if (gold.cluster_of[i] == gold.cluster_of[j]) labels(i, j) = S(1);
    }

  if (kind == ClustererKind::s2e) {
    Var<S> p = s2e_pair_probs_on(P, hidden, gold.spans);
    return bce_sum(p, labels, lower);
  }

  check(kind == ClustererKind::mes, "loss_clust_ant: mention-antecedent head expected");
  const auto cats = pair_categories(doc, gold.spans, lexicon);
  std::vector<Var<S>> probs = mes_pair_probs_on(P, hidden, gold.spans);
  Var<S> total = tape.constant(MatX<S>::Zero(1, 1));
  for (int k = 0; k < kNumPairCategories; ++k) {
    MatX<S> mask = MatX<S>::Zero(m, m);
    bool any = false;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < i; ++j)
        if (static_cast<int>(cats[i][j]) == k) {
          mask(i, j) = S(1);
          any = true;
        }
    if (any) total = add(total, bce_sum(probs[static_cast<std::size_t>(k)], labels, mask));
  }
  return total;
}

// Incremental loss: gold clusters are replayed in mention order; at each step
// the mention is scored against every cluster created so far, label 1 for its
// own gold cluster.
template <class S>
Var<S> loss_clust_incr_on(Tape<S>& tape, Bound<S>& P, Var<S> hidden,
                          const GoldMentions& gold) {
  const int m = static_cast<int>(gold.spans.size());
  if (m < 2) return tape.constant(MatX<S>::Zero(1, 1));

  Var<S> reprs = mention_reprs_on(P, hidden, gold.spans);
  std::vector<Var<S>> probs;
  std::vector<S> labels;
  std::vector<int> cluster_order;                 // gold cluster ids, creation order
  std::map<int, std::vector<int>> members;        // gold cluster id -> mention indices
  for (int i = 0; i < m; ++i) {
    for (int gc : cluster_order) {
      probs.push_back(incr_cluster_prob_on(tape, P, reprs, i, members.at(gc)));
      labels.push_back(gold.cluster_of[i] == gc ? S(1) : S(0));
    }
    const int own = gold.cluster_of[i];
    if (!members.count(own)) cluster_order.push_back(own);
    members[own].push_back(i);
  }
  if (probs.empty()) return tape.constant(MatX<S>::Zero(1, 1));
  Var<S> p = concat_rows(probs);
  MatX<S> y(static_cast<Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) y(static_cast<Index>(i), 0) = labels[i];
  return bce_sum(p, y);
}

template <class S>
struct DocLossVars {
  Var<S> start, end, clust, total;
};

// L = L_start + L_end + L_clust for one document under teacher forcing.
template <class S>
DocLossVars<S> doc_loss_on(Tape<S>& tape, Bound<S>& P, const Document& doc,
                           const std::vector<int>& ids, const RunConfig& cfg,
                           const EncoderConfig& enc_cfg, const PronounLexicon& lexicon) {
  const GoldMentions gold = gold_mentions(doc);
  Var<S> hidden = encode_on(tape, P, ids, enc_cfg);
  DocLossVars<S> out;
  out.start = loss_start_on(tape, P, hidden, doc, gold);
  out.end = loss_end_on(tape, P, hidden, doc, gold);
  const ClustererKind kind = clusterer_from_string(cfg.clusterer);
  out.clust = kind == ClustererKind::incr
                  ? loss_clust_incr_on(tape, P, hidden, gold)
                  : loss_clust_ant_on(tape, P, hidden, doc, gold, kind, lexicon);
  out.total = add(out.start, add(out.end, out.clust));
  return out;
}

struct LossBreakdown {
  double l_start = 0, l_end = 0, l_clust = 0, l_total = 0;

  LossBreakdown& operator+=(const LossBreakdown& o) {
    l_start += o.l_start;
    l_end += o.l_end;
    l_clust += o.l_clust;
    l_total = l_start + l_end + l_clust;
    return *this;
  }
};

template <class S>
LossBreakdown breakdown(const DocLossVars<S>& v) {
  LossBreakdown b;
  b.l_start = static_cast<double>(v.start.value()(0, 0));
  b.l_end = static_cast<double>(v.end.value()(0, 0));
  b.l_clust = static_cast<double>(v.clust.value()(0, 0));
  b.l_total = b.l_start + b.l_end + b.l_clust;
  return b;
}

}  // namespace maverick
