#pragma once

#include "maverick/tape.hpp"
#include "maverick/tensor.hpp"

#include <functional>
#include <map>
#include <string>

namespace maverick {

// Lazily binds named parameters onto a tape; only parameters an op touches
// become leaf nodes.
template <class S>
struct Bound {
  Tape<S>* tape = nullptr;
  const ModelParams<S>* params = nullptr;
  std::map<std::string, Var<S>> vars;

  Bound() = default;
  Bound(Tape<S>* t, const ModelParams<S>* p) : tape(t), params(p) {}

  Var<S> operator()(const std::string& name) {
    auto it = vars.find(name);
    if (it != vars.end()) return it->second;
    Var<S> v = tape->leaf(params->at(name));
    vars.emplace(name, v);
    return v;
  }
};

template <class S>
using GradMap = std::map<std::string, MatX<S>>;

// Runs one reverse sweep and collects one gradient per parameter, including
// zeros for parameters the loss never touched.
template <class S>
GradMap<S> backward(Tape<S>& tape, const Var<S>& loss, Bound<S>& bound) {
  tape.backward(loss);
  GradMap<S> grads;
  for (const auto& [name, value] : bound.params->tensors) {
    auto it = bound.vars.find(name);
    if (it != bound.vars.end())
      grads.emplace(name, it->second.grad());
    else
      grads.emplace(name, MatX<S>::Zero(value.rows(), value.cols()));
  }
  return grads;
}

struct FiniteDiffEntry {
  std::string name;
  double max_rel_error = 0;
  bool ok = true;
};

struct FiniteDiffReport {
  std::vector<FiniteDiffEntry> entries;
  double max_rel_error = 0;
  bool ok = true;

  const FiniteDiffEntry& entry(const std::string& name) const {
    for (const auto& e : entries)
      if (e.name == name) return e;
    fail("finite_diff_check: no entry for " + name);
  }
};

// Entries whose analytic and numeric gradients are both below this floor are
// compared on the absolute scale tolerance*floor instead of a pure ratio;
// a pure ratio would amplify finite-difference truncation noise on
// near-zero gradients into spurious failures.
inline constexpr double kGradDenomFloor = 1e-2;

inline double grad_rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), kGradDenomFloor});
  return std::abs(a - b) / denom;
}

// Central finite differences against the tape gradient for every parameter
// entry. `build` must be pure: (Tape&, Bound&) -> scalar loss Var.
template <class S, class BuildLoss>
FiniteDiffReport finite_diff_check(BuildLoss build, const ModelParams<S>& params,
                                   double epsilon, double tolerance) {
  GradMap<S> analytic;
  {
    Tape<S> tape;
    Bound<S> bound{&tape, &params};
    Var<S> loss = build(tape, bound);
    analytic = backward(tape, loss, bound);
  }

  ModelParams<S> work = params;
  auto eval = [&]() -> double {
    Tape<S> tape;
    Bound<S> bound{&tape, &work};
    return static_cast<double>(build(tape, bound).value()(0, 0));
  };

  FiniteDiffReport report;
  for (auto& [name, m] : work.tensors) {
    FiniteDiffEntry entry{name, 0.0, true};
    const MatX<S>& g = analytic.at(name);
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) {
        const S saved = m(r, c);
        m(r, c) = saved + S(epsilon);
        const double up = eval();
        m(r, c) = saved - S(epsilon);
        const double down = eval();
        m(r, c) = saved;
        const double numeric = (up - down) / (2.0 * epsilon);
        entry.max_rel_error =
            std::max(entry.max_rel_error, grad_rel_error(double(g(r, c)), numeric));
      }
    entry.ok = entry.max_rel_error <= tolerance;
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.ok = report.ok && entry.ok;
    report.entries.push_back(std::move(entry));
  }
  return report;
}

}  // namespace maverick
