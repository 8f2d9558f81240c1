#include "maverick/jsonl.hpp"

#include <json.hpp>

#include <cctype>
#include <istream>
#include <map>
#include <sstream>

namespace maverick {

namespace {

using nlohmann::json;

[[noreturn]] void line_fail(int line_no, const std::string& msg) {
  fail("jsonl: line " + std::to_string(line_no) + ": " + msg);
}

Document doc_from_json(const json& j, int line_no) {
  if (!j.is_object()) line_fail(line_no, "expected an object");
  for (const auto& [key, _] : j.items())
    if (key != "doc_id" && key != "sentences" && key != "speakers" && key != "clusters")
      line_fail(line_no, "unknown field '" + key + "'");
  if (!j.contains("doc_id") || !j["doc_id"].is_string())
    line_fail(line_no, "missing string field 'doc_id'");
  if (!j.contains("sentences") || !j["sentences"].is_array())
    line_fail(line_no, "missing array field 'sentences'");
  if (!j.contains("clusters") || !j["clusters"].is_array())
    line_fail(line_no, "missing array field 'clusters'");

  Document doc;
  doc.doc_id = j["doc_id"].get<std::string>();
  for (const json& sent : j["sentences"]) {
    if (!sent.is_array() || sent.empty())
      line_fail(line_no, "each sentence must be a non-empty token array");
    for (const json& tok : sent) {
      if (!tok.is_string()) line_fail(line_no, "tokens must be strings");
      doc.tokens.push_back(tok.get<std::string>());
    }
    doc.sentence_ends.push_back(doc.n_tokens() - 1);
  }
  if (j.contains("speakers")) {
    if (!j["speakers"].is_array()) line_fail(line_no, "'speakers' must be an array");
    for (const json& s : j["speakers"]) {
      if (!s.is_string()) line_fail(line_no, "speakers must be strings");
      doc.speakers.push_back(s.get<std::string>());
    }
    if (doc.speakers.size() != static_cast<std::size_t>(doc.n_sentences()))
      line_fail(line_no, "'speakers' must have one entry per sentence");
  }
  for (const json& cluster : j["clusters"]) {
    if (!cluster.is_array()) line_fail(line_no, "each cluster must be an array");
    Cluster spans;
    for (const json& span : cluster) {
      if (!span.is_array() || span.size() != 2 || !span[0].is_number_integer() ||
          !span[1].is_number_integer())
        line_fail(line_no, "each span must be an [start, end] integer pair");
      spans.push_back({span[0].get<int>(), span[1].get<int>()});
    }
    doc.gold_clusters.push_back(std::move(spans));
  }
  doc.gold_clusters = normalize_clusters(std::move(doc.gold_clusters));
  try {
    validate_document(doc);
  } catch (const Error& e) {
    line_fail(line_no, e.what());
  }
  return doc;
}

json doc_to_json(const Document& doc, const Clusters& clusters) {
  json j;
  j["doc_id"] = doc.doc_id;
  json sentences = json::array();
  for (int s = 0; s < doc.n_sentences(); ++s) {
    json sent = json::array();
    for (int t = sentence_start(doc, s); t <= doc.sentence_ends[s]; ++t)
      sent.push_back(doc.tokens[t]);
    sentences.push_back(std::move(sent));
  }
  j["sentences"] = std::move(sentences);
  if (doc.has_speakers()) j["speakers"] = doc.speakers;
  json cs = json::array();
  for (const Cluster& cluster : clusters) {
    json jc = json::array();
    for (const Span& s : cluster) jc.push_back(json::array({s.start, s.end}));
    cs.push_back(std::move(jc));
  }
  j["clusters"] = std::move(cs);
  return j;
}

}  // namespace

std::vector<Document> parse_jsonl(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    bool blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (blank) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      line_fail(line_no, std::string("invalid JSON: ") + e.what());
    }
    docs.push_back(doc_from_json(j, line_no));
  }
  return docs;
}

std::vector<Document> parse_jsonl_string(const std::string& text) {
  std::istringstream ss(text);
  return parse_jsonl(ss);
}

std::string write_jsonl(const std::vector<Document>& docs,
                        const std::vector<CorefPrediction>& predictions) {
  std::map<std::string, const Clusters*> by_id;
  for (const CorefPrediction& p : predictions)
    check(by_id.emplace(p.doc_id, &p.clusters).second,
          "jsonl write: duplicate prediction for " + p.doc_id);
  check(by_id.size() == docs.size(), "jsonl write: predictions do not align with documents");

  std::ostringstream out;
  for (const Document& doc : docs) {
    auto it = by_id.find(doc.doc_id);
    check(it != by_id.end(), "jsonl write: no prediction for " + doc.doc_id);
    Clusters clusters = normalize_clusters(*it->second);
    validate_clusters(doc, clusters, "prediction");
    out << doc_to_json(doc, clusters).dump() << "\n";
  }
  return out.str();
}

std::string write_jsonl(const std::vector<Document>& docs) {
  std::vector<CorefPrediction> preds;
  for (const Document& d : docs) preds.push_back({d.doc_id, d.gold_clusters});
  return write_jsonl(docs, preds);
}

}  // namespace maverick
