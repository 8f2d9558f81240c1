#pragma once

#include "maverick/config.hpp"
#include "maverick/gradcheck.hpp"

#include <cmath>
#include <map>
#include <string>

namespace maverick {

template <class S>
double global_grad_norm(const GradMap<S>& grads) {
  double acc = 0;
  for (const auto& [name, g] : grads)
    for (Index r = 0; r < g.rows(); ++r)
      for (Index c = 0; c < g.cols(); ++c) acc += double(g(r, c)) * double(g(r, c));
  return std::sqrt(acc);
}

template <class S>
void clip_grads(GradMap<S>& grads, double max_norm) {
  const double norm = global_grad_norm(grads);
  if (norm <= max_norm || norm == 0) return;
  const S f = static_cast<S>(max_norm / norm);
  for (auto& [name, g] : grads) g *= f;
}

// Linear warmup to 1, then linear decay; never reaches zero so late epochs
// still move.
inline double lr_schedule(long step, long total_steps, double warmup_fraction) {
  const long warm = std::max<long>(1, std::lround(warmup_fraction * double(total_steps)));
  if (step <= warm) return double(step) / double(warm);
  if (total_steps <= warm) return 1.0;
  return double(total_steps - step + 1) / double(total_steps - warm + 1);
}

// Adam with two parameter groups: encoder.* uses lr_encoder, everything else
// lr_heads.
template <class S>
struct AdamOptimizer {
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  std::map<std::string, MatX<S>> m, v;

  void step(ModelParams<S>& params, const GradMap<S>& grads, const RunConfig& cfg,
            double lr_scale) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, double(t));
    const double bc2 = 1.0 - std::pow(beta2, double(t));
    for (auto& [name, p] : params.tensors) {
      auto git = grads.find(name);
      check(git != grads.end(), "adam: missing gradient for " + name);
      const MatX<S>& g = git->second;
      MatX<S>& mm = m.try_emplace(name, MatX<S>::Zero(p.rows(), p.cols())).first->second;
      MatX<S>& vv = v.try_emplace(name, MatX<S>::Zero(p.rows(), p.cols())).first->second;
      const double lr =
          (name.rfind("encoder.", 0) == 0 ? cfg.lr_encoder : cfg.lr_heads) * lr_scale;
      for (Index r = 0; r < p.rows(); ++r)
        for (Index c = 0; c < p.cols(); ++c) {
          const double gd = double(g(r, c));
          const double md = beta1 * double(mm(r, c)) + (1.0 - beta1) * gd;
          const double vd = beta2 * double(vv(r, c)) + (1.0 - beta2) * gd * gd;
          mm(r, c) = static_cast<S>(md);
          vv(r, c) = static_cast<S>(vd);
          p(r, c) -= static_cast<S>(lr * (md / bc1) / (std::sqrt(vd / bc2) + eps));
        }
    }
  }
};

}  // namespace maverick
