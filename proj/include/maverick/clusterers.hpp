#pragma once

#include "maverick/categories.hpp"
#include "maverick/document.hpp"
#include "maverick/encoder.hpp"

#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace maverick {

enum class ClustererKind { s2e, mes, incr };

inline const char* to_string(ClustererKind k) {
  switch (k) {
    case ClustererKind::s2e: return "s2e";
    case ClustererKind::mes: return "mes";
    case ClustererKind::incr: return "incr";
  }
  return "?";
}

inline ClustererKind clusterer_from_string(const std::string& s) {
  if (s == "s2e") return ClustererKind::s2e;
  if (s == "mes") return ClustererKind::mes;
  if (s == "incr") return ClustererKind::incr;
  fail("unknown clusterer kind: '" + s + "' (expected s2e, mes or incr)");
}

// Pairwise coreference probabilities p(i, j) for antecedents j < i.
struct PairProbMatrix {
  int n = 0;
  std::vector<double> tri;  // row-major lower triangle, row i has i entries

  explicit PairProbMatrix(int n_mentions = 0)
      : n(n_mentions), tri(static_cast<std::size_t>(n_mentions) *
                           (static_cast<std::size_t>(n_mentions) - 1) / 2) {}

  static std::size_t index(int i, int j) {
    return static_cast<std::size_t>(i) * (static_cast<std::size_t>(i) - 1) / 2 +
           static_cast<std::size_t>(j);
  }
  double at(int i, int j) const { return tri[check_ij(i, j)]; }
  void set(int i, int j, double p) { tri[check_ij(i, j)] = p; }

 private:
  std::size_t check_ij(int i, int j) const {
    check(0 <= j && j < i && i < n, "PairProbMatrix: want 0 <= j < i < n");
    return index(i, j);
  }
};

// ---- parameter init ----------------------------------------------------------

template <class S>
void init_bilinear(ModelParams<S>& p, const std::string& prefix, int d_pair, Rng& rng) {
  for (const char* w : {"w_ss", "w_ee", "w_se", "w_es"})
    p.add(prefix + w, uniform_init<S>(d_pair, d_pair, d_pair, rng));
}

template <class S>
void init_projection(ModelParams<S>& p, const std::string& prefix, int d_in, int d_hid,
                     int d_out, Rng& rng) {
  p.add(prefix + ".W", uniform_init<S>(d_hid, d_in, d_in, rng));
  p.add(prefix + ".W_prime", uniform_init<S>(d_out, d_hid, d_hid, rng));
}

template <class S>
void init_s2e(ModelParams<S>& p, int d_model, int d_hid, int d_pair, Rng& rng) {
  init_projection(p, "s2e.fs", d_model, d_hid, d_pair, rng);
  init_projection(p, "s2e.fe", d_model, d_hid, d_pair, rng);
  init_bilinear(p, "s2e.", d_pair, rng);
}

template <class S>
void init_mes(ModelParams<S>& p, int d_model, int d_hid, int d_pair, Rng& rng) {
  for (int k = 0; k < kNumPairCategories; ++k) {
    const std::string prefix = "mes.cat" + std::to_string(k);
    init_projection(p, prefix + ".fs", d_model, d_hid, d_pair, rng);
    init_projection(p, prefix + ".fe", d_model, d_hid, d_pair, rng);
  }
  init_bilinear(p, "mes.", d_pair, rng);
}

template <class S>
void init_incr(ModelParams<S>& p, int d_model, int d_hid, int d_pair, Rng& rng) {
  init_projection(p, "incr.repr", 2 * d_model, d_hid, d_pair, rng);
  p.add("incr.cls", uniform_init<S>(1, d_pair, d_pair, rng));
  init_transformer_layer(p, "incr.t.", d_pair, 4 * d_pair, rng);
  p.add("incr.t.final_ln.gamma", MatX<S>::Ones(1, d_pair));
  p.add("incr.t.final_ln.beta", MatX<S>::Zero(1, d_pair));
  p.add("incr.w_c", uniform_init<S>(1, d_pair, d_pair, rng));
}

// ---- shared building blocks ---------------------------------------------------

// Mention representation: F([x_start, x_end]) -> d_pair, one row per span.
template <class S>
Var<S> mention_reprs_on(Bound<S>& P, Var<S> hidden, const std::vector<Span>& spans) {
  std::vector<int> starts, ends;
  for (const Span& s : spans) {
    starts.push_back(s.start);
    ends.push_back(s.end);
  }
  Var<S> xs = gather_rows(hidden, starts);
  Var<S> xe = gather_rows(hidden, ends);
  return ffn_rows(concat_cols(xs, xe), P("incr.repr.W"), P("incr.repr.W_prime"));
}

// Four-term bilinear pair scores from start/end projections A, B ([m, d_pair]):
// S[i][j] = a_i W_ss a_j + b_i W_ee b_j + a_i W_se b_j + b_i W_es a_j.
template <class S>
Var<S> bilinear_pair_scores(Bound<S>& P, const std::string& prefix, Var<S> A,
                            Var<S> B) {
  Var<S> t1 = matmul_nt(matmul(A, P(prefix + "w_ss")), A);
  Var<S> t2 = matmul_nt(matmul(B, P(prefix + "w_ee")), B);
  Var<S> t3 = matmul_nt(matmul(A, P(prefix + "w_se")), B);
  Var<S> t4 = matmul_nt(matmul(B, P(prefix + "w_es")), A);
  return add(add(t1, t2), add(t3, t4));
}

// Start/end projections for the s2e head over the given spans.
template <class S>
std::pair<Var<S>, Var<S>> s2e_projections(Bound<S>& P, Var<S> hidden,
                                          const std::vector<Span>& spans,
                                          const std::string& proj_prefix) {
  std::vector<int> starts, ends;
  for (const Span& s : spans) {
    starts.push_back(s.start);
    ends.push_back(s.end);
  }
  Var<S> A = ffn_rows(gather_rows(hidden, starts), P(proj_prefix + ".fs.W"),
                      P(proj_prefix + ".fs.W_prime"));
  Var<S> B = ffn_rows(gather_rows(hidden, ends), P(proj_prefix + ".fe.W"),
                      P(proj_prefix + ".fe.W_prime"));
  return {A, B};
}

// Full pair probability matrix [m, m]; entry (i, j) is meaningful for j < i.
template <class S>
Var<S> s2e_pair_probs_on(Bound<S>& P, Var<S> hidden, const std::vector<Span>& spans) {
  auto [A, B] = s2e_projections(P, hidden, spans, "s2e");
  return sigmoid_v(bilinear_pair_scores(P, "s2e.", A, B));
}

// One probability matrix per category; the router selects which entry applies
// to a pair.
template <class S>
std::vector<Var<S>> mes_pair_probs_on(Bound<S>& P, Var<S> hidden,
                                      const std::vector<Span>& spans) {
  std::vector<Var<S>> probs;
  for (int k = 0; k < kNumPairCategories; ++k) {
    auto [A, B] = s2e_projections(P, hidden, spans, "mes.cat" + std::to_string(k));
    probs.push_back(sigmoid_v(bilinear_pair_scores(P, "mes.", A, B)));
  }
  return probs;
}

inline std::vector<std::string> span_tokens(const Document& doc, Span s) {
  return {doc.tokens.begin() + s.start, doc.tokens.begin() + s.end + 1};
}

// Category of every ordered pair (i, j), j < i, for the mes router.
inline std::vector<std::vector<PairCategory>> pair_categories(
    const Document& doc, const std::vector<Span>& spans, const PronounLexicon& lexicon) {
  std::vector<std::vector<std::string>> texts;
  for (const Span& s : spans) texts.push_back(span_tokens(doc, s));
  std::vector<std::vector<PairCategory>> cat(spans.size());
  for (std::size_t i = 0; i < spans.size(); ++i) {
    cat[i].resize(i);
    for (std::size_t j = 0; j < i; ++j)
      cat[i][j] = classify_pair_category(texts[i], texts[j], lexicon);
  }
  return cat;
}

// ---- single-pair convenience wrappers -----------------------------------------

template <class S>
double s2e_pair_prob(Span m_i, Span m_j, const EncoderOutput<S>& hidden,
                     const ModelParams<S>& params) {
  check(m_j < m_i, "s2e_pair_prob: antecedent must precede the mention");
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  Var<S> h = tape.constant(hidden.hidden);
  Var<S> p = s2e_pair_probs_on(bound, h, {m_j, m_i});
  return static_cast<double>(p.value()(1, 0));
}

template <class S>
double mes_pair_prob(Span m_i, Span m_j, const Document& doc,
                     const EncoderOutput<S>& hidden, const ModelParams<S>& params,
                     const PronounLexicon& lexicon) {
  check(m_j < m_i, "mes_pair_prob: antecedent must precede the mention");
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  Var<S> h = tape.constant(hidden.hidden);
  std::vector<Span> spans{m_j, m_i};
  std::vector<Var<S>> probs = mes_pair_probs_on(bound, h, spans);
  const PairCategory k =
      classify_pair_category(span_tokens(doc, m_i), span_tokens(doc, m_j), lexicon);
  return static_cast<double>(probs[static_cast<int>(k)].value()(1, 0));
}

// ---- incremental head ----------------------------------------------------------

// Transformer input for scoring a mention against one cluster:
// [CLS; h_i; h_f; ...; h_g] plus sinusoidal positions.
template <class S>
Var<S> incr_sequence(Tape<S>& tape, Bound<S>& P, Var<S> reprs, int mention,
                     const std::vector<int>& cluster_members) {
  std::vector<Var<S>> rows_list{P("incr.cls"), row(reprs, mention)};
  for (int m : cluster_members) rows_list.push_back(row(reprs, m));
  Var<S> seq = concat_rows(rows_list);
  return add(seq, tape.constant(sinusoid_positions<S>(seq.rows(), seq.cols())));
}

// sigma(W_c . ReLU(T_CLS(h_i, h_f..h_g))) as a 1x1 var.
template <class S>
Var<S> incr_cluster_prob_on(Tape<S>& tape, Bound<S>& P, Var<S> reprs, int mention,
                            const std::vector<int>& cluster_members) {
  check(!cluster_members.empty(), "incr: cluster must be non-empty");
  Var<S> seq = incr_sequence(tape, P, reprs, mention, cluster_members);
  Var<S> enc = transformer_layer_on(P, "incr.t.", seq, /*heads=*/1);
  enc = layer_norm(enc, P("incr.t.final_ln.gamma"), P("incr.t.final_ln.beta"));
  Var<S> cls = row(enc, 0);
  return sigmoid_v(matmul_nt(relu(cls), P("incr.w_c")));
}

// Ordered clusters of mention indices built by the shift-reduce loop.
struct ClusterState {
  std::vector<std::vector<int>> clusters;  // creation order; members in order

  void validate(int n_assigned) const {
    std::vector<char> seen(static_cast<std::size_t>(n_assigned), 0);
    for (const auto& c : clusters) {
      check(!c.empty(), "ClusterState: empty cluster");
      for (int m : c) {
        check(m >= 0 && m < n_assigned, "ClusterState: mention out of range");
        check(!seen[static_cast<std::size_t>(m)], "ClusterState: mention in two clusters");
        seen[static_cast<std::size_t>(m)] = 1;
      }
    }
  }
};

// One shift-reduce step: joins the most probable cluster when its probability
// beats theta (strict), otherwise opens a singleton. Ties go to the
// earliest-created cluster. `score` maps a cluster index to p(mention in it)
// and is evaluated against the input state before anything mutates.
inline ClusterState incr_assign(int mention,
                                const std::function<double(int)>& score,
                                const ClusterState& state, double theta) {
  int best = -1;
  double best_p = 0;
  for (int c = 0; c < static_cast<int>(state.clusters.size()); ++c) {
    const double p = score(c);
    if (best < 0 || p > best_p) {
      best = c;
      best_p = p;
    }
  }
  ClusterState out = state;
  if (best >= 0 && best_p > theta)
    out.clusters[static_cast<std::size_t>(best)].push_back(mention);
  else
    out.clusters.push_back({mention});
  return out;
}

// ---- antecedent decoding --------------------------------------------------------

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  int find(int x) {
    int root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const int next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }

  void unite(int a, int b) { parent_[find(a)] = find(b); }

 private:
  std::vector<int> parent_;
};

// Best-antecedent linking: each mention links to its highest-probability
// antecedent above theta (ties to the nearest antecedent), and clusters are
// the connected components. Every mention appears in the output; singletons
// are filtered later if configured.
inline std::vector<std::vector<int>> decode_antecedents(const PairProbMatrix& probs,
                                                        double theta) {
  UnionFind uf(probs.n);
  for (int i = 1; i < probs.n; ++i) {
    int best = -1;
    double best_p = 0;
    for (int j = i - 1; j >= 0; --j) {
      const double p = probs.at(i, j);
      if (p > best_p) {
        best_p = p;
        best = j;
      }
    }
    if (best >= 0 && best_p > theta) uf.unite(i, best);
  }
  std::vector<std::vector<int>> by_root(static_cast<std::size_t>(probs.n));
  for (int i = 0; i < probs.n; ++i) by_root[static_cast<std::size_t>(uf.find(i))].push_back(i);
  std::vector<std::vector<int>> clusters;
  std::vector<char> done(static_cast<std::size_t>(probs.n), 0);
  for (int i = 0; i < probs.n; ++i) {
    const int r = uf.find(i);
    if (done[static_cast<std::size_t>(r)]) continue;
    done[static_cast<std::size_t>(r)] = 1;
    clusters.push_back(by_root[static_cast<std::size_t>(r)]);
  }
  return clusters;
}

inline std::vector<std::vector<int>> drop_singletons_if_configured(
    std::vector<std::vector<int>> clusters, bool emit_singletons) {
  if (emit_singletons) return clusters;
  std::vector<std::vector<int>> out;
  for (auto& c : clusters)
    if (c.size() > 1) out.push_back(std::move(c));
  return out;
}

}  // namespace maverick
