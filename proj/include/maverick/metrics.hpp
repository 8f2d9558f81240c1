#pragma once

#include "maverick/document.hpp"

#include <string>
#include <vector>

namespace maverick {

struct PRF {
  double p = 0, r = 0, f1 = 0;
};

// Numerators and denominators summed corpus-wide before division, matching
// the reference scorer's document-summed convention. 0/0 ratios are 0.
struct PairCounts {
  double num_p = 0, den_p = 0, num_r = 0, den_r = 0;

  PairCounts& operator+=(const PairCounts& o) {
    num_p += o.num_p;
    den_p += o.den_p;
    num_r += o.num_r;
    den_r += o.den_r;
    return *this;
  }

  PRF prf() const;
};

struct MetricReport {
  PRF muc, b3, ceaf_phi4, mention;
  double conll_f1 = 0;
};

// Per-document counters.
PairCounts muc_counts(const Clusters& gold, const Clusters& pred);
PairCounts b3_counts(const Clusters& gold, const Clusters& pred);
PairCounts ceaf_counts(const Clusters& gold, const Clusters& pred);
PairCounts mention_counts(const Clusters& gold, const Clusters& pred);

// Single-document convenience wrappers.
PRF muc(const Clusters& gold, const Clusters& pred);
PRF b_cubed(const Clusters& gold, const Clusters& pred);
PRF ceaf_phi4(const Clusters& gold, const Clusters& pred);
PRF mention_f1(const Clusters& gold, const Clusters& pred);

double conll_avg(const MetricReport& report);

// Corpus-level report; gold and pred are aligned by position.
MetricReport evaluate_corpus(const std::vector<Clusters>& gold,
                             const std::vector<Clusters>& pred);

// Maximum-sum one-to-one assignment over a dense score matrix.
double hungarian_max(const MatX<double>& scores);

// Fixed layout, six decimal places.
std::string report_to_json(const MetricReport& report);

}  // namespace maverick
