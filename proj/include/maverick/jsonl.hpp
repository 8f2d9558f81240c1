#pragma once

#include "maverick/document.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace maverick {

// One document per line:
// {"doc_id": str, "sentences": [[token,...],...], "speakers": [str,...],
//  "clusters": [[[s,e],...],...]}
// Token indices are global over the document with inclusive ends; "speakers"
// is optional and per-sentence.
std::vector<Document> parse_jsonl(std::istream& in);
std::vector<Document> parse_jsonl_string(const std::string& text);

std::string write_jsonl(const std::vector<Document>& docs,
                        const std::vector<CorefPrediction>& predictions);
std::string write_jsonl(const std::vector<Document>& docs);

}  // namespace maverick
