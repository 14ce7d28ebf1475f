#include "vmap/instructions/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "vmap/core/atomic_file.hpp"

namespace vmap::instructions {

Tokens tokenize(std::string_view text) {
  Tokens out;
  std::string current;
  for (char ch : text) {
    const auto u = static_cast<unsigned char>(ch);
    if (std::isspace(u)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current += static_cast<char>(std::tolower(u));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  if (out.empty()) throw std::invalid_argument("cannot tokenize blank text");
  return out;
}

std::string join_tokens(const Tokens& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocabulary Vocabulary::from_words(const std::vector<std::string>& words) {
  const std::set<std::string> unique(words.begin(), words.end());
  Vocabulary v;
  for (const std::string& w : unique) {
    if (w.empty() || std::any_of(w.begin(), w.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
      throw VocabularyError("vocabulary words must be nonempty and contain no whitespace");
    v.ids_.emplace(w, static_cast<int>(v.words_.size()));
    v.words_.push_back(w);
  }
  return v;
}

bool Vocabulary::contains(std::string_view word) const { return ids_.find(word) != ids_.end(); }

int Vocabulary::id(std::string_view word) const {
  const auto it = ids_.find(word);
  if (it == ids_.end()) throw VocabularyError("word not in vocabulary: " + std::string(word));
  return it->second;
}

const std::string& Vocabulary::word(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size())
    throw VocabularyError("vocabulary id out of range: " + std::to_string(id));
  return words_[static_cast<std::size_t>(id)];
}

std::vector<int> Vocabulary::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(id(t));
  return ids;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < words_.size(); ++i) out << i << ' ' << words_[i] << '\n';
  write_file_atomic(path, out.str());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw VocabularyError("cannot open vocabulary " + path.string());
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    std::size_t id = 0;
    std::string word, extra;
    if (!(fields >> id >> word) || (fields >> extra) || id != words.size())
      throw VocabularyError("malformed vocabulary line " + std::to_string(words.size() + 1) + " in " + path.string());
    words.push_back(word);
  }
  Vocabulary v = from_words(words);
  if (v.words_ != words) throw VocabularyError("vocabulary ids are not in word order in " + path.string());
  return v;
}

}  // namespace vmap::instructions
