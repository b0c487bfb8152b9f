#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "lmdata/corpus.hpp"

namespace lmdata::tokenization {

/// Text to token-count interface. Implementations must return 0 for the
/// empty string and be deterministic.
class TokenizerAdapter {
 public:
  virtual ~TokenizerAdapter() = default;
  virtual std::size_t count_tokens(std::string_view text) const = 0;
  virtual std::string name() const = 0;
  /// Whether count_tokens may be called from several threads at once.
  virtual bool concurrent_safe() const { return true; }
};

/// One token per whitespace word: the fertility lower limit.
class IdentityTokenizer final : public TokenizerAdapter {
 public:
  std::size_t count_tokens(std::string_view text) const override;
  std::string name() const override { return "identity"; }
};

/// One token per non-whitespace codepoint: the fertility upper limit.
class CharacterTokenizer final : public TokenizerAdapter {
 public:
  std::size_t count_tokens(std::string_view text) const override;
  std::string name() const override { return "character"; }
};

/// Greedy longest-match subword tokenizer over a plain-text vocabulary
/// (one piece per line). Matching restarts at every word boundary; a
/// codepoint not covered by any piece costs one token.
class GreedyVocabTokenizer final : public TokenizerAdapter {
 public:
  GreedyVocabTokenizer(std::string name, std::vector<std::string> pieces);

  static GreedyVocabTokenizer load(std::istream& vocab, std::string name);
  static GreedyVocabTokenizer load_file(const std::string& path);

  std::size_t count_tokens(std::string_view text) const override;
  std::string name() const override { return name_; }

  std::vector<std::string> tokenize_word(std::string_view word) const;
  std::size_t vocab_size() const { return pieces_.size(); }

 private:
  std::string name_;
  std::unordered_set<std::string> pieces_;
  std::size_t max_piece_codepoints_ = 0;
};

/// Words are maximal runs of non-whitespace; punctuation stays attached.
std::vector<std::string_view> segment_words(std::string_view text);

enum class Averaging { micro, macro };

struct FertilityReport {
  std::string tokenizer_name;
  std::uint64_t total_words = 0;
  std::uint64_t total_tokens = 0;
  std::uint64_t documents = 0;
  Averaging averaging = Averaging::micro;
  double fertility = 0.0;
};

class EmptyCorpusError : public std::runtime_error {
 public:
  EmptyCorpusError() : std::runtime_error("empty corpus") {}
};

/// Mergeable partial sums; fertility is computed once from the totals.
struct FertilityAccumulator {
  std::uint64_t words = 0;
  std::uint64_t tokens = 0;
  std::uint64_t documents = 0;
  /// Sum of per-document ratios over documents with at least one word.
  double ratio_sum = 0.0;
  std::uint64_t ratio_documents = 0;

  void add(std::string_view text, const TokenizerAdapter& tok);
  void merge(const FertilityAccumulator& other);
  FertilityReport finish(std::string tokenizer_name, Averaging averaging) const;
};

/// OpenMP-parallel over documents. Throws EmptyCorpusError when the corpus
/// has no words.
FertilityReport fertility(std::span<const corpus::Document> corpus, const TokenizerAdapter& tok,
                          Averaging averaging = Averaging::micro);

/// Single-threaded reference path.
FertilityReport fertility_serial(std::span<const corpus::Document> corpus,
                                 const TokenizerAdapter& tok,
                                 Averaging averaging = Averaging::micro);

/// Builds an adapter from a CLI spec: "identity", "character" / "char",
/// or "vocab:<path>".
std::unique_ptr<TokenizerAdapter> make_tokenizer(std::string_view spec);

}  // namespace lmdata::tokenization
