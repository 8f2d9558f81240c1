#include "maverick/categories.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace maverick {

const char* to_string(PairCategory c) {
  switch (c) {
    case PairCategory::PronPronC: return "pron-pron-c";
    case PairCategory::PronPronNC: return "pron-pron-nc";
    case PairCategory::EntPron: return "ent-pron";
    case PairCategory::Match: return "match";
    case PairCategory::Contains: return "contains";
    case PairCategory::Other: return "other";
  }
  return "?";
}

namespace {

// Shipped as data/pronouns.tsv; kept inline so the library works without a
// data path. A unit test asserts the file and this table stay identical.
constexpr const char* kBuiltinLexicon =
    "# pronoun\tperson\tnumber\tgender\n"
    "i\t1\tsg\t_\n"
    "me\t1\tsg\t_\n"
    "my\t1\tsg\t_\n"
    "mine\t1\tsg\t_\n"
    "myself\t1\tsg\t_\n"
    "we\t1\tpl\t_\n"
    "us\t1\tpl\t_\n"
    "our\t1\tpl\t_\n"
    "ours\t1\tpl\t_\n"
    "ourselves\t1\tpl\t_\n"
    "you\t2\t_\t_\n"
    "your\t2\t_\t_\n"
    "yours\t2\t_\t_\n"
    "yourself\t2\tsg\t_\n"
    "yourselves\t2\tpl\t_\n"
    "he\t3\tsg\tm\n"
    "him\t3\tsg\tm\n"
    "his\t3\tsg\tm\n"
    "himself\t3\tsg\tm\n"
    "she\t3\tsg\tf\n"
    "her\t3\tsg\tf\n"
    "hers\t3\tsg\tf\n"
    "herself\t3\tsg\tf\n"
    "it\t3\tsg\tn\n"
    "its\t3\tsg\tn\n"
    "itself\t3\tsg\tn\n"
    "they\t3\tpl\t_\n"
    "them\t3\tpl\t_\n"
    "their\t3\tpl\t_\n"
    "theirs\t3\tpl\t_\n"
    "themselves\t3\tpl\t_\n"
    "one\t3\tsg\t_\n"
    "oneself\t3\tsg\t_\n";

const std::set<std::string>& determiner_stoplist() {
  static const std::set<std::string> kStop = {"a", "an", "the", "this", "that",
                                              "these", "those"};
  return kStop;
}

bool punctuation_only(const std::string& s) {
  for (unsigned char c : s)
    if (std::isalnum(c)) return false;
  return true;
}

}  // namespace

std::string lowercase(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

PronounLexicon PronounLexicon::from_stream(std::istream& in) {
  PronounLexicon lex;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cols;
    std::size_t at = 0;
    while (true) {
      std::size_t tab = line.find('\t', at);
      cols.push_back(line.substr(at, tab == std::string::npos ? tab : tab - at));
      if (tab == std::string::npos) break;
      at = tab + 1;
    }
    check(cols.size() == 4,
          "pronoun lexicon: line " + std::to_string(line_no) + ": expected 4 columns");
    check(!cols[0].empty(), "pronoun lexicon: line " + std::to_string(line_no) +
                                ": empty pronoun");
    lex.entries_[lowercase(cols[0])] = {cols[1], cols[2], cols[3]};
  }
  return lex;
}

PronounLexicon PronounLexicon::from_file(const std::string& path) {
  std::ifstream in(path);
  check(in.good(), "pronoun lexicon: cannot open " + path);
  return from_stream(in);
}

const PronounLexicon& PronounLexicon::builtin() {
  static const PronounLexicon lex = [] {
    std::istringstream ss(kBuiltinLexicon);
    return from_stream(ss);
  }();
  return lex;
}

bool PronounLexicon::is_pronoun(const std::string& t) const {
  return entries_.count(t) != 0;
}

const PronounAttributes* PronounLexicon::attributes(const std::string& t) const {
  auto it = entries_.find(t);
  return it == entries_.end() ? nullptr : &it->second;
}

bool PronounLexicon::compatible(const std::string& a, const std::string& b) const {
  const PronounAttributes* pa = attributes(a);
  const PronounAttributes* pb = attributes(b);
  check(pa && pb, "compatible: both tokens must be pronouns");
  auto clash = [](const std::string& x, const std::string& y) {
    return x != kUnset && y != kUnset && x != y;
  };
  return !clash(pa->person, pb->person) && !clash(pa->number, pb->number) &&
         !clash(pa->gender, pb->gender);
}

std::vector<std::string> content_words(const std::vector<std::string>& tokens) {
  std::vector<std::string> out;
  for (const std::string& t : tokens) {
    std::string low = lowercase(t);
    if (determiner_stoplist().count(low) || punctuation_only(low)) continue;
    out.push_back(std::move(low));
  }
  return out;
}

PairCategory classify_pair_category(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b,
                                    const PronounLexicon& lexicon) {
  const bool a_pron = a.size() == 1 && lexicon.is_pronoun(lowercase(a[0]));
  const bool b_pron = b.size() == 1 && lexicon.is_pronoun(lowercase(b[0]));
  if (a_pron && b_pron)
    return lexicon.compatible(lowercase(a[0]), lowercase(b[0]))
               ? PairCategory::PronPronC
               : PairCategory::PronPronNC;
  if (a_pron || b_pron) return PairCategory::EntPron;

  std::vector<std::string> wa = content_words(a);
  std::vector<std::string> wb = content_words(b);
  std::set<std::string> sa(wa.begin(), wa.end()), sb(wb.begin(), wb.end());
  if (sa == sb) return PairCategory::Match;
  auto contains = [](const std::set<std::string>& big, const std::set<std::string>& small) {
    return std::includes(big.begin(), big.end(), small.begin(), small.end());
  };
  if (contains(sa, sb) || contains(sb, sa)) return PairCategory::Contains;
  return PairCategory::Other;
}

}  // namespace maverick
