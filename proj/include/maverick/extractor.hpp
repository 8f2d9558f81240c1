#pragma once

#include "maverick/document.hpp"
#include "maverick/encoder.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

namespace maverick {

struct MentionCandidate {
  Span span;
  double p_start = 0;
  double p_end = 0;
};

// Candidate/pair accounting for one document or a whole corpus.
struct PipelineStats {
  std::int64_t n_enumeration = 0;      // all spans
  std::int64_t n_span_len_capped = 0;  // spans under a fixed length cap
  std::int64_t n_start_end = 0;        // suffix ends for every predicted start
  std::int64_t n_eos_regularized = 0;  // sentence-bounded ends per start
  std::int64_t n_pairs_topk = 0;       // C(ceil(k*n), 2)
  std::int64_t n_pairs_pred_only = 0;  // C(|M|, 2)

  PipelineStats& operator+=(const PipelineStats& o) {
    n_enumeration += o.n_enumeration;
    n_span_len_capped += o.n_span_len_capped;
    n_start_end += o.n_start_end;
    n_eos_regularized += o.n_eos_regularized;
    n_pairs_topk += o.n_pairs_topk;
    n_pairs_pred_only += o.n_pairs_pred_only;
    return *this;
  }
};

// Inclusive candidate end range for a mention starting at `start`: up to the
// nearest end of sentence.
inline std::pair<int, int> candidate_end_range(int start,
                                               const std::vector<int>& sentence_ends) {
  auto it = std::lower_bound(sentence_ends.begin(), sentence_ends.end(), start);
  check(it != sentence_ends.end(), "candidate_end_range: start beyond last sentence");
  check(start >= 0, "candidate_end_range: negative start");
  return {start, *it};
}

// ---- scoring heads on the tape ----------------------------------------------

// Start head: one probability per token, sigma(F_start(x_i)). [n,1]
template <class S>
Var<S> start_probs_on(Bound<S>& P, Var<S> hidden) {
  return sigmoid_v(ffn_rows(hidden, P("extractor.start.W"), P("extractor.start.W_prime")));
}

// End head for one start: sigma(F_end([x_s, x_j])) over the candidate range.
// Returns [range_len, 1].
template <class S>
Var<S> end_probs_on(Bound<S>& P, Var<S> hidden, int start,
                    const std::vector<int>& sentence_ends) {
  const auto [lo, hi] = candidate_end_range(start, sentence_ends);
  const Index len = hi - lo + 1;
  Var<S> xs = broadcast_row(row(hidden, start), len);
  Var<S> cand = slice_rows(hidden, lo, len);
  Var<S> pair = concat_cols(xs, cand);
  return sigmoid_v(ffn_rows(pair, P("extractor.end.W"), P("extractor.end.W_prime")));
}

template <class S>
void init_extractor(ModelParams<S>& p, int d_model, int d_hid, Rng& rng) {
  p.add("extractor.start.W", uniform_init<S>(d_hid, d_model, d_model, rng));
  p.add("extractor.start.W_prime", uniform_init<S>(1, d_hid, d_hid, rng));
  p.add("extractor.end.W", uniform_init<S>(d_hid, 2 * d_model, 2 * d_model, rng));
  p.add("extractor.end.W_prime", uniform_init<S>(1, d_hid, d_hid, rng));
}

// ---- convenience wrappers over a fresh tape ---------------------------------

template <class S>
VecX<S> score_starts(const EncoderOutput<S>& hidden, const ModelParams<S>& params) {
  if (hidden.hidden.rows() == 0) return VecX<S>(0);
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  Var<S> h = tape.constant(hidden.hidden);
  return start_probs_on(bound, h).value().col(0);
}

template <class S>
VecX<S> score_ends(const EncoderOutput<S>& hidden, int start,
                   const std::vector<int>& sentence_ends, const ModelParams<S>& params) {
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  Var<S> h = tape.constant(hidden.hidden);
  return end_probs_on(bound, h, start, sentence_ends).value().col(0);
}

namespace detail {
inline double clamp_prob(double p) {
  return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}
}  // namespace detail

// Extraction given explicit start probabilities and a per-start end scorer;
// shared by the free-standing and the full-model paths. Thresholds are
// strict: a probability of exactly theta is rejected.
template <class EndScorer>
std::vector<MentionCandidate> extract_from_scores(
    const std::vector<double>& p_start, const std::vector<int>& sentence_ends,
    double theta, EndScorer end_scorer) {
  check(theta > 0.0 && theta < 1.0, "extract_mentions: theta must be in (0,1)");
  std::vector<MentionCandidate> out;
  for (int s = 0; s < static_cast<int>(p_start.size()); ++s) {
    if (!(p_start[s] > theta)) continue;
    const auto [lo, hi] = candidate_end_range(s, sentence_ends);
    const std::vector<double> p_end = end_scorer(s);
    check(static_cast<int>(p_end.size()) == hi - lo + 1,
          "extract_mentions: end scorer arity mismatch");
    for (int e = lo; e <= hi; ++e) {
      const double pe = p_end[static_cast<std::size_t>(e - lo)];
      if (pe > theta)
        out.push_back({{s, e}, detail::clamp_prob(p_start[static_cast<std::size_t>(s)]),
                       detail::clamp_prob(pe)});
    }
  }
  std::sort(out.begin(), out.end(),
            [](const MentionCandidate& a, const MentionCandidate& b) {
              return a.span < b.span;
            });
  return out;
}

// End-to-end extraction for one document's hidden states.
template <class S>
std::vector<MentionCandidate> extract_mentions(const Document& doc,
                                               const EncoderOutput<S>& hidden,
                                               const ModelParams<S>& params,
                                               double theta) {
  check(hidden.hidden.rows() == doc.n_tokens(), "extract_mentions: hidden size mismatch");
  if (doc.n_tokens() == 0) return {};
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  Var<S> h = tape.constant(hidden.hidden);
  VecX<S> ps = start_probs_on(bound, h).value().col(0);
  std::vector<double> p_start(ps.data(), ps.data() + ps.size());
  return extract_from_scores(p_start, doc.sentence_ends, theta, [&](int s) {
    VecX<S> pe = end_probs_on(bound, h, s, doc.sentence_ends).value().col(0);
    return std::vector<double>(pe.data(), pe.data() + pe.size());
  });
}

// Teacher-forcing variant: only the given starts are scored for ends.
template <class S>
std::vector<MentionCandidate> extract_mentions_from_starts(
    const Document& doc, const EncoderOutput<S>& hidden, const ModelParams<S>& params,
    double theta, const std::vector<int>& gold_starts) {
  if (doc.n_tokens() == 0) return {};
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  Var<S> h = tape.constant(hidden.hidden);
  std::vector<double> p_start(static_cast<std::size_t>(doc.n_tokens()), 0.0);
  for (int s : gold_starts) p_start[static_cast<std::size_t>(s)] = 1.0;
  return extract_from_scores(p_start, doc.sentence_ends, theta, [&](int s) {
    VecX<S> pe = end_probs_on(bound, h, s, doc.sentence_ends).value().col(0);
    return std::vector<double>(pe.data(), pe.data() + pe.size());
  });
}

// Closed-form candidate accounting for one document.
inline PipelineStats pipeline_stats(const Document& doc, const std::vector<int>& starts,
                                    std::size_t n_mentions, int span_len_cap,
                                    double top_k_ratio) {
  check(span_len_cap >= 0, "pipeline_stats: negative span length cap");
  check(top_k_ratio >= 0.0, "pipeline_stats: negative top-k ratio");
  const std::int64_t n = doc.n_tokens();
  PipelineStats st;
  st.n_enumeration = n * (n + 1) / 2;
  for (std::int64_t i = 0; i < n; ++i)
    st.n_span_len_capped += std::min<std::int64_t>(span_len_cap, n - i);
  for (int s : starts) {
    check(s >= 0 && s < n, "pipeline_stats: start out of range");
    st.n_start_end += n - s;
    const auto [lo, hi] = candidate_end_range(s, doc.sentence_ends);
    st.n_eos_regularized += hi - lo + 1;
  }
  const std::int64_t k =
      static_cast<std::int64_t>(std::ceil(top_k_ratio * static_cast<double>(n)));
  st.n_pairs_topk = k * (k - 1) / 2;
  const std::int64_t m = static_cast<std::int64_t>(n_mentions);
  st.n_pairs_pred_only = m * (m - 1) / 2;
  return st;
}

}  // namespace maverick
