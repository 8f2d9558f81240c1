#pragma once

#include "maverick/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

namespace maverick {

template <class S>
class Tape;

// Handle to a tape node. Cheap to copy; valid while its tape lives.
template <class S>
class Var {
 public:
  Var() = default;
  Var(Tape<S>* tape, int id) : tape_(tape), id_(id) {}

  const MatX<S>& value() const { return tape_->value(id_); }
  const MatX<S>& grad() const { return tape_->grad(id_); }
  Index rows() const { return value().rows(); }
  Index cols() const { return value().cols(); }
  bool valid() const { return tape_ != nullptr; }
  Tape<S>* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  Tape<S>* tape_ = nullptr;
  int id_ = -1;
};

// Eager reverse-mode tape over dense matrices. Values are computed when an op
// is recorded; backward() replays the recorded closures in reverse creation
// order, which is a valid topological order by construction.
template <class S>
class Tape {
 public:
  using Mat = MatX<S>;

  Var<S> constant(Mat v) { return push(std::move(v), false); }
  Var<S> leaf(Mat v) { return push(std::move(v), true); }

  const Mat& value(int id) const { return nodes_[id].value; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  template <class D>
  void accum(int id, const D& delta) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    n.grad += delta;
  }

  // Adds into a sub-block of a node's gradient.
  template <class D>
  void accum_block(int id, Index r0, Index c0, const D& delta) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    n.grad.block(r0, c0, delta.rows(), delta.cols()) += delta;
  }

  Var<S> alloc(Mat value, std::initializer_list<Var<S>> parents) {
    bool rg = false;
    for (const Var<S>& p : parents) {
      check(p.tape() == this, "op mixes vars from different tapes");
      rg = rg || nodes_[p.id()].requires_grad;
    }
    return push(std::move(value), rg);
  }

  Var<S> alloc_rg(Mat value, bool rg) { return push(std::move(value), rg); }

  void set_back(const Var<S>& v, std::function<void()> fn) {
    if (nodes_[v.id()].requires_grad) nodes_[v.id()].back = std::move(fn);
  }

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape once. A loss with no
  // parameter dependencies is legal: all gradients stay zero.
  void backward(const Var<S>& loss) {
    check(loss.tape() == this, "backward: var from another tape");
    check(loss.rows() == 1 && loss.cols() == 1, "backward: loss must be scalar");
    Node& top = nodes_[loss.id()];
    if (!top.requires_grad) return;
    top.grad(0, 0) += S(1);
    for (int i = loss.id(); i >= 0; --i) {
      Node& n = nodes_[i];
      if (n.requires_grad && n.back) n.back();
    }
  }

 private:
  struct Node {
    Mat value, grad;
    std::function<void()> back;
    bool requires_grad = false;
  };

  Var<S> push(Mat v, bool rg) {
    Node n;
    n.value = std::move(v);
    n.requires_grad = rg;
    if (rg) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return Var<S>(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Node> nodes_;
};

namespace detail {

// Column sums accumulated in double regardless of S.
template <class S>
MatX<S> colsum64(const MatX<S>& m) {
  MatX<S> out = MatX<S>::Zero(1, m.cols());
  for (Index c = 0; c < m.cols(); ++c) {
    double acc = 0;
    for (Index r = 0; r < m.rows(); ++r) acc += static_cast<double>(m(r, c));
    out(0, c) = static_cast<S>(acc);
  }
  return out;
}

inline double gauss_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
inline double gauss_pdf(double x) {
  return std::exp(-0.5 * x * x) * 0.3989422804014326779;
}

inline double sigmoid64(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

// ---- elementwise -----------------------------------------------------------

template <class S>
Var<S> add(Var<S> a, Var<S> b) {
  Tape<S>* t = a.tape();
  check(a.rows() == b.rows() && a.cols() == b.cols(), "add: shape mismatch");
  Var<S> out = t->alloc(a.value() + b.value(), {a, b});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), bi = b.id()] {
    t->accum(ai, t->grad(oi));
    t->accum(bi, t->grad(oi));
  });
  return out;
}

template <class S>
Var<S> scale(Var<S> a, double c) {
  Tape<S>* t = a.tape();
  Var<S> out = t->alloc(a.value() * S(c), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), c] {
    t->accum(ai, t->grad(oi) * S(c));
  });
  return out;
}

template <class S>
Var<S> gelu(Var<S> a) {
  Tape<S>* t = a.tape();
  MatX<S> v(a.rows(), a.cols());
  const MatX<S>& x = a.value();
  for (Index r = 0; r < x.rows(); ++r)
    for (Index c = 0; c < x.cols(); ++c) {
      const double z = static_cast<double>(x(r, c));
      v(r, c) = static_cast<S>(z * detail::gauss_cdf(z));
    }
  Var<S> out = t->alloc(std::move(v), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id()] {
    const MatX<S>& xv = t->value(ai);
    const MatX<S>& g = t->grad(oi);
    MatX<S> d(xv.rows(), xv.cols());
    for (Index r = 0; r < xv.rows(); ++r)
      for (Index c = 0; c < xv.cols(); ++c) {
        const double z = static_cast<double>(xv(r, c));
        d(r, c) = static_cast<S>(detail::gauss_cdf(z) + z * detail::gauss_pdf(z));
      }
    t->accum(ai, g.cwiseProduct(d));
  });
  return out;
}

template <class S>
Var<S> relu(Var<S> a) {
  Tape<S>* t = a.tape();
  Var<S> out = t->alloc(a.value().cwiseMax(S(0)), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id()] {
    const MatX<S>& xv = t->value(ai);
    MatX<S> d = (xv.array() > S(0)).template cast<S>().matrix();
    t->accum(ai, t->grad(oi).cwiseProduct(d));
  });
  return out;
}

template <class S>
Var<S> sigmoid_v(Var<S> a) {
  Tape<S>* t = a.tape();
  MatX<S> v(a.rows(), a.cols());
  const MatX<S>& x = a.value();
  for (Index r = 0; r < x.rows(); ++r)
    for (Index c = 0; c < x.cols(); ++c)
      v(r, c) = static_cast<S>(detail::sigmoid64(static_cast<double>(x(r, c))));
  Var<S> out = t->alloc(std::move(v), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id()] {
    const MatX<S>& y = t->value(oi);
    MatX<S> d = y.array() * (S(1) - y.array());
    t->accum(ai, t->grad(oi).cwiseProduct(d));
  });
  return out;
}

// ---- products --------------------------------------------------------------

template <class S>
Var<S> matmul(Var<S> a, Var<S> b) {
  Tape<S>* t = a.tape();
  check(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Var<S> out = t->alloc(a.value() * b.value(), {a, b});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), bi = b.id()] {
    const MatX<S>& g = t->grad(oi);
    if (t->requires_grad(ai)) t->accum(ai, g * t->value(bi).transpose());
    if (t->requires_grad(bi)) t->accum(bi, t->value(ai).transpose() * g);
  });
  return out;
}

// A * B^T without materializing a transpose node.
template <class S>
Var<S> matmul_nt(Var<S> a, Var<S> b) {
  Tape<S>* t = a.tape();
  check(a.cols() == b.cols(), "matmul_nt: inner dimension mismatch");
  Var<S> out = t->alloc(a.value() * b.value().transpose(), {a, b});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), bi = b.id()] {
    const MatX<S>& g = t->grad(oi);
    if (t->requires_grad(ai)) t->accum(ai, g * t->value(bi));
    if (t->requires_grad(bi)) t->accum(bi, g.transpose() * t->value(ai));
  });
  return out;
}

// ---- structure -------------------------------------------------------------

template <class S>
Var<S> concat_cols(Var<S> a, Var<S> b) {
  Tape<S>* t = a.tape();
  check(a.rows() == b.rows(), "concat_cols: row mismatch");
  MatX<S> v(a.rows(), a.cols() + b.cols());
  v.leftCols(a.cols()) = a.value();
  v.rightCols(b.cols()) = b.value();
  Var<S> out = t->alloc(std::move(v), {a, b});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), bi = b.id(), ca = a.cols(), cb = b.cols()] {
    const MatX<S>& g = t->grad(oi);
    t->accum(ai, g.leftCols(ca));
    t->accum(bi, g.rightCols(cb));
  });
  return out;
}

template <class S>
Var<S> concat_cols(const std::vector<Var<S>>& parts) {
  check(!parts.empty(), "concat_cols: empty list");
  Var<S> out = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) out = concat_cols(out, parts[i]);
  return out;
}

template <class S>
Var<S> concat_rows(const std::vector<Var<S>>& parts) {
  check(!parts.empty(), "concat_rows: empty list");
  Tape<S>* t = parts[0].tape();
  Index cols = parts[0].cols();
  Index rows = 0;
  for (const Var<S>& p : parts) {
    check(p.cols() == cols, "concat_rows: column mismatch");
    rows += p.rows();
  }
  MatX<S> v(rows, cols);
  Index at = 0;
  bool rg = false;
  for (const Var<S>& p : parts) {
    check(p.tape() == t, "concat_rows: mixed tapes");
    v.middleRows(at, p.rows()) = p.value();
    at += p.rows();
    rg = rg || t->requires_grad(p.id());
  }
  Var<S> out = t->alloc_rg(std::move(v), rg);
  if (!rg) return out;
  std::vector<int> ids;
  std::vector<Index> sizes;
  for (const Var<S>& p : parts) {
    ids.push_back(p.id());
    sizes.push_back(p.rows());
  }
  t->set_back(out, [t, oi = out.id(), ids, sizes] {
    const MatX<S>& g = t->grad(oi);
    Index at = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      t->accum(ids[k], g.middleRows(at, sizes[k]));
      at += sizes[k];
    }
  });
  return out;
}

template <class S>
Var<S> slice_rows(Var<S> a, Index r0, Index n) {
  Tape<S>* t = a.tape();
  check(r0 >= 0 && n >= 0 && r0 + n <= a.rows(), "slice_rows: out of range");
  Var<S> out = t->alloc(a.value().middleRows(r0, n), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), r0] {
    t->accum_block(ai, r0, 0, t->grad(oi));
  });
  return out;
}

template <class S>
Var<S> slice_cols(Var<S> a, Index c0, Index n) {
  Tape<S>* t = a.tape();
  check(c0 >= 0 && n >= 0 && c0 + n <= a.cols(), "slice_cols: out of range");
  Var<S> out = t->alloc(a.value().middleCols(c0, n), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), c0] {
    t->accum_block(ai, 0, c0, t->grad(oi));
  });
  return out;
}

template <class S>
Var<S> row(Var<S> a, Index r) {
  return slice_rows(a, r, 1);
}

template <class S>
Var<S> gather_rows(Var<S> table, std::vector<int> idx) {
  Tape<S>* t = table.tape();
  MatX<S> v(static_cast<Index>(idx.size()), table.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    check(idx[r] >= 0 && idx[r] < table.rows(), "gather_rows: index out of range");
    v.row(static_cast<Index>(r)) = table.value().row(idx[r]);
  }
  Var<S> out = t->alloc(std::move(v), {table});
  t->set_back(out, [t, oi = out.id(), ti = table.id(), idx = std::move(idx)] {
    const MatX<S>& g = t->grad(oi);
    for (std::size_t r = 0; r < idx.size(); ++r)
      t->accum_block(ti, idx[r], 0, g.row(static_cast<Index>(r)));
  });
  return out;
}

template <class S>
Var<S> broadcast_row(Var<S> a, Index n) {
  Tape<S>* t = a.tape();
  check(a.rows() == 1, "broadcast_row: expects a single row");
  MatX<S> v(n, a.cols());
  for (Index r = 0; r < n; ++r) v.row(r) = a.value().row(0);
  Var<S> out = t->alloc(std::move(v), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id()] {
    t->accum(ai, detail::colsum64(t->grad(oi)));
  });
  return out;
}

// ---- normalization ---------------------------------------------------------

template <class S>
Var<S> rowwise_softmax(Var<S> a) {
  Tape<S>* t = a.tape();
  const MatX<S>& x = a.value();
  MatX<S> y(x.rows(), x.cols());
  for (Index r = 0; r < x.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Index c = 0; c < x.cols(); ++c) mx = std::max(mx, double(x(r, c)));
    double z = 0;
    for (Index c = 0; c < x.cols(); ++c) z += std::exp(double(x(r, c)) - mx);
    for (Index c = 0; c < x.cols(); ++c)
      y(r, c) = static_cast<S>(std::exp(double(x(r, c)) - mx) / z);
  }
  Var<S> out = t->alloc(std::move(y), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id()] {
    const MatX<S>& yv = t->value(oi);
    const MatX<S>& g = t->grad(oi);
    MatX<S> d(yv.rows(), yv.cols());
    for (Index r = 0; r < yv.rows(); ++r) {
      double dot = 0;
      for (Index c = 0; c < yv.cols(); ++c) dot += double(g(r, c)) * double(yv(r, c));
      for (Index c = 0; c < yv.cols(); ++c)
        d(r, c) = static_cast<S>(double(yv(r, c)) * (double(g(r, c)) - dot));
    }
    t->accum(ai, d);
  });
  return out;
}

// Row-wise layer norm with learned gain/bias (gamma, beta are 1 x d).
template <class S>
Var<S> layer_norm(Var<S> x, Var<S> gamma, Var<S> beta, double eps = 1e-5) {
  Tape<S>* t = x.tape();
  check(gamma.rows() == 1 && beta.rows() == 1 && gamma.cols() == x.cols() &&
            beta.cols() == x.cols(),
        "layer_norm: affine shape mismatch");
  const Index d = x.cols();
  const MatX<S>& xv = x.value();
  MatX<S> xhat(xv.rows(), d), y(xv.rows(), d);
  std::vector<double> inv_std(static_cast<std::size_t>(xv.rows()));
  for (Index r = 0; r < xv.rows(); ++r) {
    double mean = 0;
    for (Index c = 0; c < d; ++c) mean += double(xv(r, c));
    mean /= double(d);
    double var = 0;
    for (Index c = 0; c < d; ++c) {
      const double dev = double(xv(r, c)) - mean;
      var += dev * dev;
    }
    var /= double(d);
    const double is = 1.0 / std::sqrt(var + eps);
    inv_std[static_cast<std::size_t>(r)] = is;
    for (Index c = 0; c < d; ++c) {
      const double h = (double(xv(r, c)) - mean) * is;
      xhat(r, c) = static_cast<S>(h);
      y(r, c) = static_cast<S>(h * double(gamma.value()(0, c)) + double(beta.value()(0, c)));
    }
  }
  Var<S> out = t->alloc(std::move(y), {x, gamma, beta});
  t->set_back(out, [t, oi = out.id(), xi = x.id(), gi = gamma.id(), bi = beta.id(),
                    xhat = std::move(xhat), inv_std = std::move(inv_std), d] {
    const MatX<S>& g = t->grad(oi);
    if (t->requires_grad(gi)) t->accum(gi, detail::colsum64<S>(g.cwiseProduct(xhat)));
    if (t->requires_grad(bi)) t->accum(bi, detail::colsum64<S>(g));
    if (t->requires_grad(xi)) {
      const MatX<S>& gm = t->value(gi);
      MatX<S> dx(g.rows(), d);
      for (Index r = 0; r < g.rows(); ++r) {
        double m1 = 0, m2 = 0;
        for (Index c = 0; c < d; ++c) {
          const double dh = double(g(r, c)) * double(gm(0, c));
          m1 += dh;
          m2 += dh * double(xhat(r, c));
        }
        m1 /= double(d);
        m2 /= double(d);
        const double is = inv_std[static_cast<std::size_t>(r)];
        for (Index c = 0; c < d; ++c) {
          const double dh = double(g(r, c)) * double(gm(0, c));
          dx(r, c) = static_cast<S>(is * (dh - m1 - double(xhat(r, c)) * m2));
        }
      }
      t->accum(xi, dx);
    }
  });
  return out;
}

// ---- reductions ------------------------------------------------------------

template <class S>
Var<S> sum_all(Var<S> a) {
  Tape<S>* t = a.tape();
  double acc = 0;
  const MatX<S>& x = a.value();
  for (Index r = 0; r < x.rows(); ++r)
    for (Index c = 0; c < x.cols(); ++c) acc += double(x(r, c));
  MatX<S> v(1, 1);
  v(0, 0) = static_cast<S>(acc);
  Var<S> out = t->alloc(std::move(v), {a});
  t->set_back(out, [t, oi = out.id(), ai = a.id(), r = a.rows(), c = a.cols()] {
    t->accum(ai, MatX<S>::Constant(r, c, t->grad(oi)(0, 0)));
  });
  return out;
}

inline constexpr double kProbClamp = 1e-7;

// Weighted binary cross-entropy over probabilities, accumulated in double.
// Probabilities are clamped to [kProbClamp, 1-kProbClamp] before the logs;
// clamped entries get zero gradient.
template <class S>
Var<S> bce_sum(Var<S> p, const MatX<S>& labels, const MatX<S>& weights) {
  Tape<S>* t = p.tape();
  check(labels.rows() == p.rows() && labels.cols() == p.cols(), "bce_sum: label shape");
  check(weights.rows() == p.rows() && weights.cols() == p.cols(), "bce_sum: weight shape");
  const MatX<S>& pv = p.value();
  double acc = 0;
  for (Index r = 0; r < pv.rows(); ++r)
    for (Index c = 0; c < pv.cols(); ++c) {
      const double w = double(weights(r, c));
      if (w == 0) continue;
      const double y = double(labels(r, c));
      const double q = std::clamp(double(pv(r, c)), kProbClamp, 1.0 - kProbClamp);
      acc -= w * (y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
    }
  MatX<S> v(1, 1);
  v(0, 0) = static_cast<S>(acc);
  Var<S> out = t->alloc(std::move(v), {p});
  t->set_back(out, [t, oi = out.id(), pi = p.id(), labels, weights] {
    const double g = double(t->grad(oi)(0, 0));
    const MatX<S>& pv = t->value(pi);
    MatX<S> d = MatX<S>::Zero(pv.rows(), pv.cols());
    for (Index r = 0; r < pv.rows(); ++r)
      for (Index c = 0; c < pv.cols(); ++c) {
        const double w = double(weights(r, c));
        if (w == 0) continue;
        const double q = double(pv(r, c));
        if (q <= kProbClamp || q >= 1.0 - kProbClamp) continue;
        const double y = double(labels(r, c));
        d(r, c) = static_cast<S>(g * w * (q - y) / (q * (1.0 - q)));
      }
    t->accum(pi, d);
  });
  return out;
}

template <class S>
Var<S> bce_sum(Var<S> p, const MatX<S>& labels) {
  MatX<S> ones = MatX<S>::Ones(p.rows(), p.cols());
  return bce_sum(p, labels, ones);
}

// W_prime * GeLU(W * x) applied to every row of X: X [n,d_in], W [d_hid,d_in],
// W_prime [d_out,d_hid] -> [n,d_out].
template <class S>
Var<S> ffn_rows(Var<S> X, Var<S> W, Var<S> W_prime) {
  return matmul_nt(gelu(matmul_nt(X, W)), W_prime);
}

}  // namespace maverick
