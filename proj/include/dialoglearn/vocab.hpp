#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace dialoglearn {

// Lowercase, strip trailing punctuation from each token, split on whitespace.
std::vector<std::string> tokenize(const std::string& text);

// Dense word -> index map with a reserved unknown token at index 0.
class Vocabulary {
 public:
  static constexpr const char* kUnknown = "<unk>";

  Vocabulary();
  // Sorted unique tokens of the given texts, after the unknown token.
  static Vocabulary build(const std::vector<std::string>& texts);
  // Restores a vocabulary from an index-ordered word list (checkpoint load).
  static Vocabulary from_words(const std::vector<std::string>& words);

  int index(const std::string& word) const;  // unknown index when absent
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

struct BowEntry {
  int index = 0;
  double count = 0.0;
  friend bool operator==(const BowEntry&, const BowEntry&) = default;
};

// Sparse bag-of-words token counts, sorted by vocabulary index.
using Bow = std::vector<BowEntry>;

Bow encode_bow(const std::string& text, const Vocabulary& vocab);

}  // namespace dialoglearn
