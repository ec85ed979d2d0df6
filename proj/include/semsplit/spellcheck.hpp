#pragma once

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "semsplit/semcodec.hpp"

namespace semsplit {

/// Classic single-row edit distance.
inline int levenshtein(const std::string& a, const std::string& b) {
  const std::size_t m = a.size(), n = b.size();
  if (m == 0) return static_cast<int>(n);
  if (n == 0) return static_cast<int>(m);
  std::vector<int> costs(n + 1);
  for (std::size_t j = 0; j <= n; ++j) costs[j] = static_cast<int>(j);
  for (std::size_t i = 0; i < m; ++i) {
    costs[0] = static_cast<int>(i) + 1;
    int corner = static_cast<int>(i);
    for (std::size_t j = 0; j < n; ++j) {
      const int upper = costs[j + 1];
      if (a[i] == b[j]) {
        costs[j + 1] = corner;
      } else {
        costs[j + 1] = std::min({costs[j], upper, corner}) + 1;
      }
      corner = upper;
    }
  }
  return costs[n];
}

/// Ordered dictionary; order defines the tie-break between equally close
/// candidates.
using Dictionary = std::vector<std::string>;

/// One lowercase word per line, UTF-8, no duplicates.
inline Dictionary load_dictionary(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dictionary: cannot open " + path);
  Dictionary dict;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!seen.insert(line).second)
      throw std::runtime_error("load_dictionary: duplicate word '" + line + "' in " + path);
    dict.push_back(line);
  }
  if (dict.empty()) throw std::runtime_error("load_dictionary: empty dictionary " + path);
  return dict;
}

/// Replaces each out-of-dictionary word by the closest dictionary word
/// (ties to the earliest entry); words further than distance 2 from every
/// entry are left unchanged.
inline std::string spell_correct_word(const std::string& word, const Dictionary& dict) {
  if (dict.empty()) throw std::invalid_argument("spell_correct: empty dictionary");
  for (const auto& entry : dict)
    if (entry == word) return word;
  int best_distance = 3;
  const std::string* best = nullptr;
  const int word_len = static_cast<int>(word.size());
  for (const auto& entry : dict) {
    const int len_gap = std::abs(static_cast<int>(entry.size()) - word_len);
    if (len_gap >= best_distance) continue;
    const int d = levenshtein(word, entry);
    if (d < best_distance) {
      best_distance = d;
      best = &entry;
    }
  }
  return best ? *best : word;
}

inline TextUnit spell_correct(const TextUnit& t, const Dictionary& dict) {
  if (dict.empty()) throw std::invalid_argument("spell_correct: empty dictionary");
  TextUnit out;
  const auto words = split_words(t.text);
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i > 0) out.text.push_back(' ');
    out.text += spell_correct_word(words[i], dict);
  }
  return out;
}

}  // namespace semsplit
