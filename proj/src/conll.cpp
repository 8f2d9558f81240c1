#include "maverick/conll.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <sstream>

namespace maverick {

namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(int line_no, const std::string& msg) {
  fail("conll: line " + std::to_string(line_no) + ": " + msg);
}

int parse_cluster_id(const std::string& s, int line_no) {
  if (s.empty()) parse_fail(line_no, "empty cluster id");
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c)))
      parse_fail(line_no, "cluster id is not a number: '" + s + "'");
  return std::stoi(s);
}

struct DocBuilder {
  Document doc;
  // id -> stack of open start positions (LIFO close), and finished spans
  std::map<int, std::vector<int>> open;
  std::map<int, Cluster> spans;
  int line_of_last_open = 0;

  void finish_sentence(int line_no, bool has_rows) {
    if (!has_rows) return;
    for (const auto& [id, starts] : open)
      if (!starts.empty())
        parse_fail(line_no, "span of cluster " + std::to_string(id) +
                                " crosses a sentence boundary (opened on line " +
                                std::to_string(line_of_last_open) + ")");
    doc.sentence_ends.push_back(doc.n_tokens() - 1);
  }

  Document finish(int line_no) {
    for (const auto& [id, starts] : open)
      if (!starts.empty())
        parse_fail(line_no, "unbalanced '(' for cluster " + std::to_string(id));
    for (auto& [id, cluster] : spans) {
      std::sort(cluster.begin(), cluster.end());
      doc.gold_clusters.push_back(cluster);
    }
    validate_document(doc);
    return std::move(doc);
  }
};

void apply_coref_cell(DocBuilder& b, const std::string& cell, int token, int line_no) {
  if (cell == "-" || cell == "_") return;
  std::size_t at = 0;
  while (at < cell.size()) {
    std::size_t bar = cell.find('|', at);
    std::string item = cell.substr(at, bar == std::string::npos ? bar : bar - at);
    at = bar == std::string::npos ? cell.size() : bar + 1;
    if (item.empty()) parse_fail(line_no, "empty item in coreference cell");
    const bool opens = item.front() == '(';
    const bool closes = item.back() == ')';
    if (opens && closes) {
      const int id = parse_cluster_id(item.substr(1, item.size() - 2), line_no);
      b.spans[id].push_back({token, token});
    } else if (opens) {
      const int id = parse_cluster_id(item.substr(1), line_no);
      b.open[id].push_back(token);
      b.line_of_last_open = line_no;
    } else if (closes) {
      const int id = parse_cluster_id(item.substr(0, item.size() - 1), line_no);
      auto it = b.open.find(id);
      if (it == b.open.end() || it->second.empty())
        parse_fail(line_no, "')' without a matching '(' for cluster " + std::to_string(id));
      b.spans[id].push_back({it->second.back(), token});
      it->second.pop_back();
    } else {
      parse_fail(line_no, "malformed coreference item '" + item + "'");
    }
  }
}

}  // namespace

std::vector<Document> parse_conll(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  bool in_doc = false;
  bool sentence_open = false;
  bool saw_speaker = false;
  DocBuilder builder;

  auto break_sentence = [&](int at_line) {
    if (sentence_open) {
      builder.finish_sentence(at_line, true);
      sentence_open = false;
    }
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.rfind("#begin document", 0) == 0) {
      if (in_doc) parse_fail(line_no, "nested '#begin document'");
      in_doc = true;
      sentence_open = false;
      saw_speaker = false;
      builder = DocBuilder{};
      builder.doc.doc_id = trim(t.substr(15));
      continue;
    }
    if (t == "#end document") {
      if (!in_doc) parse_fail(line_no, "'#end document' outside a document");
      break_sentence(line_no);
      if (!saw_speaker) builder.doc.speakers.clear();
      docs.push_back(builder.finish(line_no));
      in_doc = false;
      continue;
    }
    if (!in_doc) {
      if (!t.empty()) parse_fail(line_no, "content outside '#begin document'");
      continue;
    }
    if (t.empty()) {
      break_sentence(line_no);
      continue;
    }
    if (t[0] == '#') continue;  // other comment lines are ignored

    std::vector<std::string> cols = split_ws(t);
    if (cols.size() < 2) parse_fail(line_no, "expected at least token and coreference columns");

    std::string token, speaker;
    bool has_speaker = false;
    if (cols.size() == 2) {
      token = cols[0];
    } else if (cols.size() == 3) {
      token = cols[0];
      speaker = cols[1];
      has_speaker = true;
    } else {
      token = cols[3];
      if (cols.size() >= 11) {
        speaker = cols[9];
        has_speaker = true;
      }
      builder.doc.conll_rows.push_back(cols);
    }

    if (!sentence_open) {
      sentence_open = true;
      if (has_speaker) {
        builder.doc.speakers.push_back(speaker);
        saw_speaker = true;
      } else {
        builder.doc.speakers.push_back("");
      }
    }
    builder.doc.tokens.push_back(token);
    apply_coref_cell(builder, cols.back(), builder.doc.n_tokens() - 1, line_no);
  }
  if (in_doc) parse_fail(line_no, "missing '#end document'");
  return docs;
}

std::vector<Document> parse_conll_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_conll(ss);
}

namespace {

std::string coref_cell(const Clusters& clusters, int token) {
  std::vector<std::pair<int, int>> opens;  // (end, cluster) for spans starting here
  std::vector<int> singles, closes;
  for (std::size_t c = 0; c < clusters.size(); ++c)
    for (const Span& s : clusters[c]) {
      if (s.start == token && s.end == token)
        singles.push_back(static_cast<int>(c));
      else if (s.start == token)
        opens.emplace_back(s.end, static_cast<int>(c));
      else if (s.end == token)
        closes.push_back(static_cast<int>(c));
    }
  // Longer spans open first so that `id)` closes pair LIFO per id.
  std::sort(opens.begin(), opens.end(),
            [](const auto& a, const auto& b) { return a.first > b.first; });
  std::string cell;
  auto append = [&cell](const std::string& item) {
    if (!cell.empty()) cell += '|';
    cell += item;
  };
  for (const auto& [end, c] : opens) append("(" + std::to_string(c));
  for (int c : singles) append("(" + std::to_string(c) + ")");
  for (int c : closes) append(std::to_string(c) + ")");
  return cell.empty() ? "-" : cell;
}

void check_token_writable(const std::string& tok, const std::string& doc_id) {
  check(!tok.empty(), "conll write: empty token in " + doc_id);
  for (char c : tok)
    check(!std::isspace(static_cast<unsigned char>(c)),
          "conll write: token with whitespace in " + doc_id);
}

// Bracket notation pairs a close with the most recent open of the same id, so
// crossing spans inside one cluster have no faithful encoding.
void check_no_crossing(const Clusters& clusters, const std::string& doc_id) {
  for (const Cluster& cluster : clusters)
    for (std::size_t a = 0; a < cluster.size(); ++a)
      for (std::size_t b = a + 1; b < cluster.size(); ++b) {
        const Span& x = cluster[a];
        const Span& y = cluster[b];
        const bool crossing = (x.start < y.start && y.start <= x.end && x.end < y.end) ||
                              (y.start < x.start && x.start <= y.end && y.end < x.end);
        check(!crossing, "conll write: crossing spans within one cluster are not "
                         "representable in bracket notation (" +
                             doc_id + ")");
      }
}

}  // namespace

std::string write_conll(const std::vector<Document>& docs,
                        const std::vector<CorefPrediction>& predictions) {
  std::map<std::string, const Clusters*> by_id;
  for (const CorefPrediction& p : predictions) {
    check(by_id.emplace(p.doc_id, &p.clusters).second,
          "conll write: duplicate prediction for " + p.doc_id);
  }
  check(by_id.size() == docs.size(), "conll write: predictions do not align with documents");

  std::ostringstream out;
  for (const Document& doc : docs) {
    auto it = by_id.find(doc.doc_id);
    check(it != by_id.end(), "conll write: no prediction for " + doc.doc_id);
    const Clusters clusters = normalize_clusters(*it->second);
    validate_clusters(doc, clusters, "prediction");
    check_no_crossing(clusters, doc.doc_id);

    const bool raw = !doc.conll_rows.empty();
    if (raw)
      check(static_cast<int>(doc.conll_rows.size()) == doc.n_tokens(),
            "conll write: preserved rows out of sync in " + doc.doc_id);

    out << "#begin document " << doc.doc_id << "\n";
    for (int t = 0; t < doc.n_tokens(); ++t) {
      const int sent = sentence_index(doc, t);
      if (raw) {
        const auto& cols = doc.conll_rows[static_cast<std::size_t>(t)];
        for (std::size_t c = 0; c + 1 < cols.size(); ++c) out << cols[c] << "   ";
        out << coref_cell(clusters, t) << "\n";
      } else {
        check_token_writable(doc.tokens[t], doc.doc_id);
        out << doc.tokens[t];
        if (doc.has_speakers()) {
          check_token_writable(doc.speakers[sent], doc.doc_id);
          out << "   " << doc.speakers[sent];
        }
        out << "   " << coref_cell(clusters, t) << "\n";
      }
      if (t == doc.sentence_ends[sent] && t + 1 < doc.n_tokens()) out << "\n";
    }
    out << "#end document\n";
  }
  return out.str();
}

std::string write_conll(const std::vector<Document>& docs) {
  std::vector<CorefPrediction> preds;
  for (const Document& d : docs) preds.push_back({d.doc_id, d.gold_clusters});
  return write_conll(docs, preds);
}

}  // namespace maverick
