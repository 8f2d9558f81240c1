#pragma once

#include "maverick/gradcheck.hpp"
#include "maverick/tape.hpp"
#include "maverick/tensor.hpp"

#include <string>
#include <vector>

namespace maverick {

struct EncoderConfig {
  int vocab_size = 0;
  int d_model = 32;
  int layers = 2;
  int heads = 4;
  int max_len = 256;

  int d_ff() const { return 4 * d_model; }

  void validate() const {
    check(vocab_size > 0, "encoder: vocab_size must be positive");
    check(d_model > 0 && layers > 0 && heads > 0 && max_len > 0,
          "encoder: dims must be positive");
    check(d_model % heads == 0, "encoder: heads must divide d_model");
  }
};

template <class S>
struct EncoderOutput {
  MatX<S> hidden;  // [n_tokens, d_model]
};

// Interleaved sin/cos position table.
template <class S>
MatX<S> sinusoid_positions(Index n, Index d) {
  MatX<S> p(n, d);
  for (Index pos = 0; pos < n; ++pos)
    for (Index i = 0; i < d; ++i) {
      const double angle =
          double(pos) / std::pow(10000.0, double(2 * (i / 2)) / double(d));
      p(pos, i) = static_cast<S>((i % 2 == 0) ? std::sin(angle) : std::cos(angle));
    }
  return p;
}

template <class S>
void init_transformer_layer(ModelParams<S>& p, const std::string& prefix, int d,
                            int d_ff, Rng& rng) {
  p.add(prefix + "ln1.gamma", MatX<S>::Ones(1, d));
  p.add(prefix + "ln1.beta", MatX<S>::Zero(1, d));
  p.add(prefix + "attn.wq", uniform_init<S>(d, d, d, rng));
  p.add(prefix + "attn.wk", uniform_init<S>(d, d, d, rng));
  p.add(prefix + "attn.wv", uniform_init<S>(d, d, d, rng));
  p.add(prefix + "attn.wo", uniform_init<S>(d, d, d, rng));
  p.add(prefix + "ln2.gamma", MatX<S>::Ones(1, d));
  p.add(prefix + "ln2.beta", MatX<S>::Zero(1, d));
  p.add(prefix + "ffn.W", uniform_init<S>(d_ff, d, d, rng));
  p.add(prefix + "ffn.W_prime", uniform_init<S>(d, d_ff, d_ff, rng));
}

template <class S>
void init_encoder(ModelParams<S>& p, const EncoderConfig& cfg, Rng& rng) {
  cfg.validate();
  p.add("encoder.embed", uniform_init<S>(cfg.vocab_size, cfg.d_model, cfg.d_model, rng));
  for (int l = 0; l < cfg.layers; ++l)
    init_transformer_layer(p, "encoder.l" + std::to_string(l) + ".", cfg.d_model,
                           cfg.d_ff(), rng);
  p.add("encoder.final_ln.gamma", MatX<S>::Ones(1, cfg.d_model));
  p.add("encoder.final_ln.beta", MatX<S>::Zero(1, cfg.d_model));
}

// Pre-LN block: x += attn(LN(x)); x += ffn(LN(x)).
template <class S>
Var<S> transformer_layer_on(Bound<S>& P, const std::string& prefix, Var<S> x,
                            int heads) {
  const Index d = x.cols();
  const Index dh = d / heads;

  Var<S> h = layer_norm(x, P(prefix + "ln1.gamma"), P(prefix + "ln1.beta"));
  Var<S> q = matmul_nt(h, P(prefix + "attn.wq"));
  Var<S> k = matmul_nt(h, P(prefix + "attn.wk"));
  Var<S> v = matmul_nt(h, P(prefix + "attn.wv"));

  std::vector<Var<S>> outs;
  for (int hd = 0; hd < heads; ++hd) {
    Var<S> qh = slice_cols(q, hd * dh, dh);
    Var<S> kh = slice_cols(k, hd * dh, dh);
    Var<S> vh = slice_cols(v, hd * dh, dh);
    Var<S> att = rowwise_softmax(scale(matmul_nt(qh, kh), 1.0 / std::sqrt(double(dh))));
    outs.push_back(matmul(att, vh));
  }
  x = add(x, matmul_nt(concat_cols(outs), P(prefix + "attn.wo")));

  Var<S> h2 = layer_norm(x, P(prefix + "ln2.gamma"), P(prefix + "ln2.beta"));
  return add(x, ffn_rows(h2, P(prefix + "ffn.W"), P(prefix + "ffn.W_prime")));
}

template <class S>
Var<S> encode_on(Tape<S>& tape, Bound<S>& P, const std::vector<int>& ids,
                 const EncoderConfig& cfg) {
  check(static_cast<int>(ids.size()) <= cfg.max_len,
        "encode: sequence of " + std::to_string(ids.size()) +
            " tokens exceeds max length " + std::to_string(cfg.max_len));
  for (int id : ids)
    check(id >= 0 && id < cfg.vocab_size,
          "encode: token id " + std::to_string(id) + " outside vocabulary");
  if (ids.empty()) return tape.constant(MatX<S>(0, cfg.d_model));

  const Index n = static_cast<Index>(ids.size());
  Var<S> x = gather_rows(P("encoder.embed"), ids);
  x = add(x, tape.constant(sinusoid_positions<S>(n, cfg.d_model)));
  for (int l = 0; l < cfg.layers; ++l)
    x = transformer_layer_on(P, "encoder.l" + std::to_string(l) + ".", x, cfg.heads);
  x = layer_norm(x, P("encoder.final_ln.gamma"), P("encoder.final_ln.beta"));
  check_finite(x.value(), "encoder output");
  return x;
}

// Standalone forward pass; deterministic given (ids, params).
template <class S>
EncoderOutput<S> encode(const std::vector<int>& ids, const ModelParams<S>& params,
                        const EncoderConfig& cfg) {
  Tape<S> tape;
  Bound<S> bound{&tape, &params};
  return {encode_on(tape, bound, ids, cfg).value()};
}

// W_prime * GeLU(W * x) on a single column vector; the building block of all
// scoring heads.
template <class S>
VecX<S> ffn_project(const VecX<S>& x, const MatX<S>& W, const MatX<S>& W_prime) {
  check(W.cols() == x.size(), "ffn_project: W does not match input size");
  check(W_prime.cols() == W.rows(), "ffn_project: W_prime does not match W");
  VecX<S> h = W * x;
  for (Index i = 0; i < h.size(); ++i) {
    const double z = static_cast<double>(h(i));
    h(i) = static_cast<S>(z * detail::gauss_cdf(z));
  }
  return W_prime * h;
}

}  // namespace maverick
