#pragma once

#include "maverick/types.hpp"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace maverick {

inline constexpr const char* kUnkToken = "<unk>";

// Token-to-id mapping built from a training corpus; id 0 is the unknown token.
class Vocab {
 public:
  Vocab() = default;
  explicit Vocab(std::vector<std::string> tokens);

  static Vocab build(const std::vector<std::vector<std::string>>& token_lists);

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  int id_or_unk(const std::string& token) const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Flat run configuration; JSON fields use exactly these names.
struct RunConfig {
  // encoder
  int d_model = 32;
  int layers = 2;
  int heads = 4;
  int max_len = 256;
  // heads
  int d_hid = 64;
  int d_pair = 32;
  // pipeline
  std::string clusterer = "s2e";
  double threshold = 0.5;
  bool emit_singletons = false;
  bool speaker_prefix = false;
  // training
  double lr_heads = 3e-4;
  double lr_encoder = 2e-5;
  int epochs = 10;
  int grad_accum_steps = 4;
  double grad_clip = 1.0;
  double warmup_fraction = 0.1;
  int patience = 20;
  std::uint64_t seed = 12345;
  // resources
  std::vector<std::string> vocab;  // filled at training time
  std::string pronoun_lexicon;     // optional path; builtin table when empty

  void validate() const;
  std::string to_json_string() const;
  static RunConfig from_json_string(const std::string& text);
  static RunConfig from_json_file(const std::string& path);
};

}  // namespace maverick
