#include "maverick/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <vector>

namespace maverick {

namespace {

double safe_ratio(double num, double den) { return den == 0 ? 0.0 : num / den; }

double f1_of(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

std::map<Span, int> cluster_index(const Clusters& clusters) {
  std::map<Span, int> idx;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const Span& s : clusters[c]) idx.emplace(s, static_cast<int>(c));
  return idx;
}

// MUC numerator for one side: sum over key clusters of |S| minus the number
// of parts S is split into by the response (unaligned mentions count as their
// own part each).
double muc_num(const Clusters& key, const std::map<Span, int>& response) {
  double num = 0;
  for (const Cluster& s : key) {
    std::set<int> parts;
    int unaligned = 0;
    for (const Span& m : s) {
      auto it = response.find(m);
      if (it == response.end())
        ++unaligned;
      else
        parts.insert(it->second);
    }
    num += double(s.size()) - double(parts.size() + unaligned);
  }
  return num;
}

double muc_den(const Clusters& key) {
  double den = 0;
  for (const Cluster& s : key) den += double(s.size()) - 1.0;
  return den;
}

// B3 numerator for one side: per mention of the key, |key cluster intersected
// with its response cluster| / |key cluster|.
double b3_num(const Clusters& key, const Clusters& response,
              const std::map<Span, int>& response_idx) {
  double num = 0;
  for (const Cluster& kc : key) {
    std::set<Span> kset(kc.begin(), kc.end());
    for (const Span& m : kc) {
      auto it = response_idx.find(m);
      if (it == response_idx.end()) continue;  // contributes 0
      const Cluster& rc = response[static_cast<std::size_t>(it->second)];
      int inter = 0;
      for (const Span& x : rc) inter += kset.count(x) ? 1 : 0;
      num += double(inter) / double(kc.size());
    }
  }
  return num;
}

double total_mentions(const Clusters& clusters) {
  double n = 0;
  for (const Cluster& c : clusters) n += double(c.size());
  return n;
}

// phi4 entity similarity: 2|G and P| / (|G| + |P|).
double phi4(const Cluster& g, const Cluster& p) {
  std::set<Span> gs(g.begin(), g.end());
  int inter = 0;
  for (const Span& x : p) inter += gs.count(x) ? 1 : 0;
  return 2.0 * double(inter) / double(g.size() + p.size());
}

// Minimum-cost assignment of all rows (rows <= cols) via the standard
// potentials formulation.
double hungarian_min(const MatX<double>& a) {
  const int n = static_cast<int>(a.rows());
  const int m = static_cast<int>(a.cols());
  const double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
  std::vector<double> v(static_cast<std::size_t>(m) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(m) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(m) + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(m) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(m) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = 0;
      double delta = kInf;
      for (int j = 1; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0 != 0);
  }
  double cost = 0;
  for (int j = 1; j <= m; ++j)
    if (p[static_cast<std::size_t>(j)] != 0) cost += a(p[static_cast<std::size_t>(j)] - 1, j - 1);
  return cost;
}

}  // namespace

PRF PairCounts::prf() const {
  PRF out;
  out.p = safe_ratio(num_p, den_p);
  out.r = safe_ratio(num_r, den_r);
  out.f1 = f1_of(out.p, out.r);
  return out;
}

double hungarian_max(const MatX<double>& scores) {
  if (scores.rows() == 0 || scores.cols() == 0) return 0;
  if (scores.rows() > scores.cols()) {
    MatX<double> t = scores.transpose();
    return -hungarian_min(MatX<double>(-t));
  }
  return -hungarian_min(MatX<double>(-scores));
}

PairCounts muc_counts(const Clusters& gold, const Clusters& pred) {
  const auto gidx = cluster_index(gold);
  const auto pidx = cluster_index(pred);
  return {muc_num(pred, gidx), muc_den(pred), muc_num(gold, pidx), muc_den(gold)};
}

PairCounts b3_counts(const Clusters& gold, const Clusters& pred) {
  const auto gidx = cluster_index(gold);
  const auto pidx = cluster_index(pred);
  return {b3_num(pred, gold, gidx), total_mentions(pred), b3_num(gold, pred, pidx),
          total_mentions(gold)};
}

PairCounts ceaf_counts(const Clusters& gold, const Clusters& pred) {
  double best = 0;
  if (!gold.empty() && !pred.empty()) {
    MatX<double> sim(static_cast<Index>(gold.size()), static_cast<Index>(pred.size()));
    for (std::size_t g = 0; g < gold.size(); ++g)
      for (std::size_t p = 0; p < pred.size(); ++p)
        sim(static_cast<Index>(g), static_cast<Index>(p)) = phi4(gold[g], pred[p]);
    best = hungarian_max(sim);
  }
  return {best, double(pred.size()), best, double(gold.size())};
}

PairCounts mention_counts(const Clusters& gold, const Clusters& pred) {
  std::set<Span> gs, ps;
  for (const Cluster& c : gold) gs.insert(c.begin(), c.end());
  for (const Cluster& c : pred) ps.insert(c.begin(), c.end());
  double tp = 0;
  for (const Span& s : ps) tp += gs.count(s) ? 1 : 0;
  return {tp, double(ps.size()), tp, double(gs.size())};
}

PRF muc(const Clusters& gold, const Clusters& pred) { return muc_counts(gold, pred).prf(); }
PRF b_cubed(const Clusters& gold, const Clusters& pred) { return b3_counts(gold, pred).prf(); }
PRF ceaf_phi4(const Clusters& gold, const Clusters& pred) {
  return ceaf_counts(gold, pred).prf();
}
PRF mention_f1(const Clusters& gold, const Clusters& pred) {
  return mention_counts(gold, pred).prf();
}

double conll_avg(const MetricReport& report) {
  return (report.muc.f1 + report.b3.f1 + report.ceaf_phi4.f1) / 3.0;
}

MetricReport evaluate_corpus(const std::vector<Clusters>& gold,
                             const std::vector<Clusters>& pred) {
  check(gold.size() == pred.size(), "evaluate: corpus sizes differ");
  PairCounts cm, cb, cc, cn;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    cm += muc_counts(gold[i], pred[i]);
    cb += b3_counts(gold[i], pred[i]);
    cc += ceaf_counts(gold[i], pred[i]);
    cn += mention_counts(gold[i], pred[i]);
  }
  MetricReport report;
  report.muc = cm.prf();
  report.b3 = cb.prf();
  report.ceaf_phi4 = cc.prf();
  report.mention = cn.prf();
  report.conll_f1 = conll_avg(report);
  return report;
}

std::string report_to_json(const MetricReport& report) {
  char buf[512];
  auto prf = [](char* out, std::size_t cap, const PRF& m) {
    std::snprintf(out, cap, "{\"p\": %.6f, \"r\": %.6f, \"f1\": %.6f}", m.p, m.r, m.f1);
  };
  char muc_s[96], b3_s[96], ceaf_s[96], men_s[96];
  prf(muc_s, sizeof muc_s, report.muc);
  prf(b3_s, sizeof b3_s, report.b3);
  prf(ceaf_s, sizeof ceaf_s, report.ceaf_phi4);
  prf(men_s, sizeof men_s, report.mention);
  std::snprintf(buf, sizeof buf,
                "{\"muc\": %s, \"b3\": %s, \"ceaf_phi4\": %s, \"conll_f1\": %.6f, "
                "\"mention\": %s}",
                muc_s, b3_s, ceaf_s, report.conll_f1, men_s);
  return buf;
}

}  // namespace maverick
