#pragma once

#include "maverick/types.hpp"

#include <array>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace maverick {

// Mention-pair categories routed to the multi-expert scorers, in expert
// index order.
enum class PairCategory : int {
  PronPronC = 0,   // both pronouns, attribute-compatible
  PronPronNC = 1,  // both pronouns, incompatible
  EntPron = 2,     // exactly one side is a pronoun
  Match = 3,       // same content words
  Contains = 4,    // one side's content words contain the other's
  Other = 5,
};

inline constexpr int kNumPairCategories = 6;

const char* to_string(PairCategory c);

// Person/number/gender attributes; kUnset never conflicts.
struct PronounAttributes {
  std::string person, number, gender;
};

inline constexpr const char* kUnset = "_";

class PronounLexicon {
 public:
  // Stream of lines: pronoun<TAB>person<TAB>number<TAB>gender, '_' for unknown.
  // '#' starts a comment line.
  static PronounLexicon from_stream(std::istream& in);
  static PronounLexicon from_file(const std::string& path);
  static const PronounLexicon& builtin();

  bool is_pronoun(const std::string& lowercase_token) const;
  const PronounAttributes* attributes(const std::string& lowercase_token) const;

  // Compatible iff no attribute is set to different values on both sides.
  bool compatible(const std::string& a, const std::string& b) const;

  std::size_t size() const { return entries_.size(); }

 private:
  std::unordered_map<std::string, PronounAttributes> entries_;
};

std::string lowercase(const std::string& s);

// Case-folded tokens minus determiners and punctuation-only tokens.
std::vector<std::string> content_words(const std::vector<std::string>& tokens);

// Total and symmetric classification of a mention pair by its token strings.
PairCategory classify_pair_category(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b,
                                    const PronounLexicon& lexicon);

}  // namespace maverick
