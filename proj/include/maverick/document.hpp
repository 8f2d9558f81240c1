#pragma once

#include "maverick/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace maverick {

// Token span with inclusive end.
struct Span {
  int start = 0;
  int end = 0;

  friend bool operator==(const Span&, const Span&) = default;
  friend auto operator<=>(const Span&, const Span&) = default;
};

using Cluster = std::vector<Span>;
using Clusters = std::vector<Cluster>;

struct Document {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<int> sentence_ends;  // index of each sentence's last token
  std::vector<std::string> speakers;  // per sentence; empty when absent
  Clusters gold_clusters;

  // Raw column sets from CoNLL ingestion, kept verbatim for serialization.
  std::vector<std::vector<std::string>> conll_rows;

  int n_tokens() const { return static_cast<int>(tokens.size()); }
  int n_sentences() const { return static_cast<int>(sentence_ends.size()); }
  bool has_speakers() const { return !speakers.empty(); }

  friend bool operator==(const Document& a, const Document& b) {
    return a.doc_id == b.doc_id && a.tokens == b.tokens &&
           a.sentence_ends == b.sentence_ends && a.speakers == b.speakers &&
           a.gold_clusters == b.gold_clusters;
  }
};

struct CorefPrediction {
  std::string doc_id;
  Clusters clusters;
};

// Index of the sentence containing token t.
int sentence_index(const Document& doc, int token);

// First token index of sentence s.
int sentence_start(const Document& doc, int sentence);

// Throws on any structural violation (ordering, span bounds, cross-sentence
// spans, span reuse across clusters, speaker arity).
void validate_document(const Document& doc);

// Validates prediction clusters against a document (bounds, sentence
// containment, disjointness).
void validate_clusters(const Document& doc, const Clusters& clusters,
                       const std::string& what);

// Removes size-1 clusters, preserving order.
Clusters filter_singletons(const Clusters& clusters);

// Sorts spans within each cluster and drops nothing; cluster order is kept.
Clusters normalize_clusters(Clusters clusters);

// Speaker-name insertion: whenever the speaker changes between consecutive
// sentences (including the first), the sentence is prefixed with the three
// tokens [SPK] <name> :  Gold spans and sentence ends shift accordingly.
struct SpeakerInsertion {
  Document augmented;
  std::vector<int> prefix_len;  // per original sentence, 0 or 3
  std::vector<int> shift;       // per original sentence, token index shift

  bool any() const;
  Span to_augmented(const Document& original, Span s) const;
  // Spans overlapping an inserted prefix are rejected (nullopt), not clipped.
  std::optional<Span> to_original(Span s) const;
};

SpeakerInsertion insert_speakers_mapped(const Document& doc);
Document insert_speakers(const Document& doc);

// A slice of a document that fits the encoder's max length, with gold
// clusters restricted to spans inside the slice.
struct Segment {
  Document doc;      // token indices local to the segment
  int offset = 0;    // segment start in the source document
  std::size_t source = 0;  // index of the source document
};

// Splits at sentence boundaries so that every segment has at most max_len
// tokens. A single sentence longer than max_len is an error.
std::vector<Segment> split_document(const Document& doc, int max_len,
                                    std::size_t source_index);

}  // namespace maverick
