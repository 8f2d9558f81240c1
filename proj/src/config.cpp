#include "maverick/config.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace maverick {

using nlohmann::json;

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  check(!tokens_.empty() && tokens_[0] == kUnkToken,
        "vocab: first entry must be " + std::string(kUnkToken));
  for (int i = 0; i < size(); ++i) {
    check(index_.emplace(tokens_[static_cast<std::size_t>(i)], i).second,
          "vocab: duplicate token '" + tokens_[static_cast<std::size_t>(i)] + "'");
  }
}

Vocab Vocab::build(const std::vector<std::vector<std::string>>& token_lists) {
  std::set<std::string> uniq;
  for (const auto& list : token_lists) uniq.insert(list.begin(), list.end());
  uniq.erase(kUnkToken);
  std::vector<std::string> tokens{kUnkToken};
  tokens.insert(tokens.end(), uniq.begin(), uniq.end());
  return Vocab(std::move(tokens));
}

int Vocab::id_or_unk(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? 0 : it->second;
}

void RunConfig::validate() const {
  check(d_model > 0 && layers > 0 && heads > 0 && max_len > 0 && d_hid > 0 && d_pair > 0,
        "config: dimensions must be positive");
  check(d_model % heads == 0, "config: heads must divide d_model");
  check(clusterer == "s2e" || clusterer == "mes" || clusterer == "incr",
        "config: clusterer must be s2e, mes or incr");
  check(threshold > 0.0 && threshold < 1.0, "config: threshold must be in (0,1)");
  check(lr_heads > 0.0 && lr_encoder > 0.0, "config: learning rates must be positive");
  check(epochs >= 1, "config: epochs must be at least 1");
  check(grad_accum_steps >= 1, "config: grad_accum_steps must be at least 1");
  check(grad_clip > 0.0, "config: grad_clip must be positive");
  check(warmup_fraction >= 0.0 && warmup_fraction < 1.0,
        "config: warmup_fraction must be in [0,1)");
  check(patience >= 1, "config: patience must be at least 1");
}

std::string RunConfig::to_json_string() const {
  json j;
  j["d_model"] = d_model;
  j["layers"] = layers;
  j["heads"] = heads;
  j["max_len"] = max_len;
  j["d_hid"] = d_hid;
  j["d_pair"] = d_pair;
  j["clusterer"] = clusterer;
  j["threshold"] = threshold;
  j["emit_singletons"] = emit_singletons;
  j["speaker_prefix"] = speaker_prefix;
  j["lr_heads"] = lr_heads;
  j["lr_encoder"] = lr_encoder;
  j["epochs"] = epochs;
  j["grad_accum_steps"] = grad_accum_steps;
  j["grad_clip"] = grad_clip;
  j["warmup_fraction"] = warmup_fraction;
  j["patience"] = patience;
  j["seed"] = seed;
  if (!vocab.empty()) j["vocab"] = vocab;
  if (!pronoun_lexicon.empty()) j["pronoun_lexicon"] = pronoun_lexicon;
  return j.dump();
}

RunConfig RunConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    fail(std::string("config: invalid JSON: ") + e.what());
  }
  check(j.is_object(), "config: expected a JSON object");

  RunConfig cfg;
  auto get_int = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    check(j[key].is_number_integer(), std::string("config: '") + key + "' must be an integer");
    out = j[key].get<int>();
  };
  auto get_num = [&](const char* key, double& out) {
    if (!j.contains(key)) return;
    check(j[key].is_number(), std::string("config: '") + key + "' must be a number");
    out = j[key].get<double>();
  };
  auto get_bool = [&](const char* key, bool& out) {
    if (!j.contains(key)) return;
    check(j[key].is_boolean(), std::string("config: '") + key + "' must be a boolean");
    out = j[key].get<bool>();
  };
  auto get_str = [&](const char* key, std::string& out) {
    if (!j.contains(key)) return;
    check(j[key].is_string(), std::string("config: '") + key + "' must be a string");
    out = j[key].get<std::string>();
  };

  static const std::set<std::string> known = {
      "d_model", "layers", "heads", "max_len", "d_hid", "d_pair", "clusterer",
      "threshold", "emit_singletons", "speaker_prefix", "lr_heads", "lr_encoder",
      "epochs", "grad_accum_steps", "grad_clip", "warmup_fraction", "patience",
      "seed", "vocab", "pronoun_lexicon"};
  for (const auto& [key, _] : j.items())
    check(known.count(key) != 0, "config: unknown field '" + key + "'");

  get_int("d_model", cfg.d_model);
  get_int("layers", cfg.layers);
  get_int("heads", cfg.heads);
  get_int("max_len", cfg.max_len);
  get_int("d_hid", cfg.d_hid);
  get_int("d_pair", cfg.d_pair);
  get_str("clusterer", cfg.clusterer);
  get_num("threshold", cfg.threshold);
  get_bool("emit_singletons", cfg.emit_singletons);
  get_bool("speaker_prefix", cfg.speaker_prefix);
  get_num("lr_heads", cfg.lr_heads);
  get_num("lr_encoder", cfg.lr_encoder);
  get_int("epochs", cfg.epochs);
  get_int("grad_accum_steps", cfg.grad_accum_steps);
  get_num("grad_clip", cfg.grad_clip);
  get_num("warmup_fraction", cfg.warmup_fraction);
  get_int("patience", cfg.patience);
  if (j.contains("seed")) {
    check(j["seed"].is_number_integer() && j["seed"].get<std::int64_t>() >= 0,
          "config: 'seed' must be a non-negative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("vocab")) {
    check(j["vocab"].is_array(), "config: 'vocab' must be an array of strings");
    for (const json& t : j["vocab"]) {
      check(t.is_string(), "config: vocab entries must be strings");
      cfg.vocab.push_back(t.get<std::string>());
    }
  }
  get_str("pronoun_lexicon", cfg.pronoun_lexicon);
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "config: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_string(ss.str());
}

}  // namespace maverick
