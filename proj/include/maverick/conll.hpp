#pragma once

#include "maverick/document.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace maverick {

// CoNLL-2012-style column format. Documents are delimited by
// `#begin document <id>` / `#end document`, sentences by blank lines, and the
// coreference annotation lives in the final column using `(id`, `id)`, `(id)`
// notation with `|` joining multiple items and `-` for none.
//
// Row layouts accepted:
//   2 columns:   token coref
//   3 columns:   token speaker coref
//   4+ columns:  CoNLL-2012 rows; token is column 3, speaker column 9 when
//                present, coref the last column. Columns are preserved
//                verbatim for serialization.
std::vector<Document> parse_conll(std::istream& in);
std::vector<Document> parse_conll_string(const std::string& text);

// Serializes documents with the given predictions in the coreference column.
// Cluster ids are assigned by list position, so parsing the output yields the
// same cluster order back.
std::string write_conll(const std::vector<Document>& docs,
                        const std::vector<CorefPrediction>& predictions);

// Convenience: each document's gold clusters as its prediction.
std::string write_conll(const std::vector<Document>& docs);

}  // namespace maverick
