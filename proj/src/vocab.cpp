#include "dialoglearn/vocab.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "dialoglearn/common.hpp"

namespace dialoglearn {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&]() {
    while (!cur.empty()) {
      char c = cur.back();
      if (c == '.' || c == ',' || c == '!' || c == '?' || c == ';' || c == ':')
        cur.pop_back();
      else
        break;
    }
    if (!cur.empty()) out.push_back(cur);
    cur.clear();
  };
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
  }
  flush();
  return out;
}

Vocabulary::Vocabulary() {
  words_.push_back(kUnknown);
  index_[kUnknown] = 0;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts) {
  std::set<std::string> tokens;
  for (const auto& t : texts)
    for (auto& w : tokenize(t)) tokens.insert(std::move(w));
  tokens.erase(kUnknown);
  Vocabulary v;
  for (const auto& w : tokens) {
    v.index_[w] = static_cast<int>(v.words_.size());
    v.words_.push_back(w);
  }
  return v;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  if (words.empty() || words[0] != kUnknown)
    throw DataError("vocabulary word list must start with the unknown token");
  Vocabulary v;
  for (std::size_t i = 1; i < words.size(); ++i) {
    if (v.index_.count(words[i])) throw DataError("duplicate vocabulary word '" + words[i] + "'");
    v.index_[words[i]] = static_cast<int>(i);
    v.words_.push_back(words[i]);
  }
  return v;
}

int Vocabulary::index(const std::string& word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

Bow encode_bow(const std::string& text, const Vocabulary& vocab) {
  std::map<int, double> counts;
  for (const auto& tok : tokenize(text)) counts[vocab.index(tok)] += 1.0;
  Bow out;
  out.reserve(counts.size());
  for (const auto& [idx, cnt] : counts) out.push_back(BowEntry{idx, cnt});
  return out;
}

}  // namespace dialoglearn
