#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vmap::instructions {

using Tokens = std::vector<std::string>;

// Lowercase, whitespace split. Throws std::invalid_argument on blank text.
Tokens tokenize(std::string_view text);
std::string join_tokens(const Tokens& tokens);

class VocabularyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ids are dense and assigned in lexicographic word order. There is no
// unknown-word id: lookups of unseen words throw.
class Vocabulary {
 public:
  Vocabulary() = default;
  static Vocabulary from_words(const std::vector<std::string>& words);

  std::size_t size() const { return words_.size(); }
  bool contains(std::string_view word) const;
  int id(std::string_view word) const;
  const std::string& word(int id) const;
  std::vector<int> encode(const Tokens& tokens) const;
  const std::vector<std::string>& words() const { return words_; }

  // One "id word" pair per line, sorted by id.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.words_ == b.words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int, std::less<>> ids_;
};

}  // namespace vmap::instructions
