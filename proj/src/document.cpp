#include "maverick/document.hpp"

#include <algorithm>
#include <set>

namespace maverick {

int sentence_index(const Document& doc, int token) {
  check(token >= 0 && token < doc.n_tokens(), "token index out of range");
  auto it = std::lower_bound(doc.sentence_ends.begin(), doc.sentence_ends.end(), token);
  check(it != doc.sentence_ends.end(), "token beyond last sentence end");
  return static_cast<int>(it - doc.sentence_ends.begin());
}

int sentence_start(const Document& doc, int sentence) {
  check(sentence >= 0 && sentence < doc.n_sentences(), "sentence index out of range");
  return sentence == 0 ? 0 : doc.sentence_ends[sentence - 1] + 1;
}

void validate_clusters(const Document& doc, const Clusters& clusters,
                       const std::string& what) {
  std::set<Span> seen;
  for (const Cluster& cluster : clusters) {
    check(!cluster.empty(), what + ": empty cluster in " + doc.doc_id);
    for (const Span& s : cluster) {
      check(0 <= s.start && s.start <= s.end && s.end < doc.n_tokens(),
            what + ": span out of range in " + doc.doc_id);
      check(sentence_index(doc, s.start) == sentence_index(doc, s.end),
            what + ": span crosses a sentence boundary in " + doc.doc_id);
      check(seen.insert(s).second,
            what + ": span appears in more than one mention slot in " + doc.doc_id);
    }
  }
}

void validate_document(const Document& doc) {
  const int n = doc.n_tokens();
  for (std::size_t i = 0; i < doc.sentence_ends.size(); ++i) {
    check(doc.sentence_ends[i] >= 0 && doc.sentence_ends[i] < n,
          "sentence end out of range in " + doc.doc_id);
    if (i > 0)
      check(doc.sentence_ends[i] > doc.sentence_ends[i - 1],
            "sentence ends not strictly increasing in " + doc.doc_id);
  }
  if (n > 0) {
    check(!doc.sentence_ends.empty() && doc.sentence_ends.back() == n - 1,
          "last sentence end must be the last token in " + doc.doc_id);
  } else {
    check(doc.sentence_ends.empty(), "empty document with sentence ends: " + doc.doc_id);
    check(doc.gold_clusters.empty(), "empty document with clusters: " + doc.doc_id);
  }
  if (doc.has_speakers())
    check(static_cast<int>(doc.speakers.size()) == doc.n_sentences(),
          "speakers must be per-sentence in " + doc.doc_id);
  validate_clusters(doc, doc.gold_clusters, "gold");
}

Clusters filter_singletons(const Clusters& clusters) {
  Clusters out;
  for (const Cluster& c : clusters)
    if (c.size() > 1) out.push_back(c);
  return out;
}

Clusters normalize_clusters(Clusters clusters) {
  for (Cluster& c : clusters) std::sort(c.begin(), c.end());
  return clusters;
}

bool SpeakerInsertion::any() const {
  for (int p : prefix_len)
    if (p > 0) return true;
  return false;
}

Span SpeakerInsertion::to_augmented(const Document& original, Span s) const {
  const int sent = sentence_index(original, s.start);
  return {s.start + shift[sent], s.end + shift[sent]};
}

std::optional<Span> SpeakerInsertion::to_original(Span s) const {
  const int sent = sentence_index(augmented, s.start);
  const int aug_sent_start = sentence_start(augmented, sent);
  if (s.start < aug_sent_start + prefix_len[sent]) return std::nullopt;
  return Span{s.start - shift[sent], s.end - shift[sent]};
}

SpeakerInsertion insert_speakers_mapped(const Document& doc) {
  SpeakerInsertion ins;
  if (!doc.has_speakers()) {
    ins.augmented = doc;
    ins.prefix_len.assign(static_cast<std::size_t>(doc.n_sentences()), 0);
    ins.shift.assign(static_cast<std::size_t>(doc.n_sentences()), 0);
    return ins;
  }

  Document out;
  out.doc_id = doc.doc_id;
  out.speakers = doc.speakers;
  int shift = 0;
  for (int s = 0; s < doc.n_sentences(); ++s) {
    const bool change = s == 0 || doc.speakers[s] != doc.speakers[s - 1];
    if (change) {
      out.tokens.push_back("[SPK]");
      out.tokens.push_back(doc.speakers[s]);
      out.tokens.push_back(":");
      shift += 3;
    }
    ins.prefix_len.push_back(change ? 3 : 0);
    ins.shift.push_back(shift);
    const int lo = sentence_start(doc, s);
    for (int t = lo; t <= doc.sentence_ends[s]; ++t) out.tokens.push_back(doc.tokens[t]);
    out.sentence_ends.push_back(doc.sentence_ends[s] + shift);
  }
  for (const Cluster& cluster : doc.gold_clusters) {
    Cluster mapped;
    for (const Span& sp : cluster) mapped.push_back({sp.start, sp.end});
    for (Span& sp : mapped) {
      const int sent = sentence_index(doc, sp.start);
      sp.start += ins.shift[sent];
      sp.end += ins.shift[sent];
    }
    out.gold_clusters.push_back(std::move(mapped));
  }
  ins.augmented = std::move(out);
  validate_document(ins.augmented);
  return ins;
}

Document insert_speakers(const Document& doc) {
  return insert_speakers_mapped(doc).augmented;
}

std::vector<Segment> split_document(const Document& doc, int max_len,
                                    std::size_t source_index) {
  check(max_len > 0, "split: max length must be positive");
  std::vector<Segment> segments;
  if (doc.n_tokens() == 0) {
    segments.push_back({doc, 0, source_index});
    return segments;
  }
  if (doc.n_tokens() <= max_len) {
    segments.push_back({doc, 0, source_index});
    return segments;
  }

  int s = 0;
  while (s < doc.n_sentences()) {
    const int seg_start = sentence_start(doc, s);
    int e = s;
    while (e < doc.n_sentences() && doc.sentence_ends[e] - seg_start + 1 <= max_len) ++e;
    check(e > s, "split: sentence longer than the encoder max length in " + doc.doc_id);

    Segment seg;
    seg.offset = seg_start;
    seg.source = source_index;
    seg.doc.doc_id = doc.doc_id;
    const int seg_end = doc.sentence_ends[e - 1];
    for (int t = seg_start; t <= seg_end; ++t) seg.doc.tokens.push_back(doc.tokens[t]);
    for (int i = s; i < e; ++i) {
      seg.doc.sentence_ends.push_back(doc.sentence_ends[i] - seg_start);
      if (doc.has_speakers()) seg.doc.speakers.push_back(doc.speakers[i]);
    }
    for (const Cluster& cluster : doc.gold_clusters) {
      Cluster kept;
      for (const Span& sp : cluster)
        if (sp.start >= seg_start && sp.end <= seg_end)
          kept.push_back({sp.start - seg_start, sp.end - seg_start});
      if (!kept.empty()) seg.doc.gold_clusters.push_back(std::move(kept));
    }
    validate_document(seg.doc);
    segments.push_back(std::move(seg));
    s = e;
  }
  return segments;
}

}  // namespace maverick
