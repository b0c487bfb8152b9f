#include "lmdata/tokenization.hpp"

#include <algorithm>
#include <fstream>

#include "lmdata/text.hpp"

namespace lmdata::tokenization {

std::size_t IdentityTokenizer::count_tokens(std::string_view text) const {
  return text::count_words(text);
}

std::size_t CharacterTokenizer::count_tokens(std::string_view text) const {
  std::size_t n = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    if (!text::is_space(text::next_codepoint(text, pos))) ++n;
  }
  return n;
}

GreedyVocabTokenizer::GreedyVocabTokenizer(std::string name, std::vector<std::string> pieces)
    : name_(std::move(name)) {
  for (auto& p : pieces) {
    if (p.empty()) continue;
    max_piece_codepoints_ = std::max(max_piece_codepoints_, text::codepoint_count(p));
    pieces_.insert(std::move(p));
  }
}

GreedyVocabTokenizer GreedyVocabTokenizer::load(std::istream& vocab, std::string name) {
  std::vector<std::string> pieces;
  std::string line;
  while (std::getline(vocab, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    // Optional "piece<TAB>score" format.
    if (auto tab = line.find('\t'); tab != std::string::npos) line.resize(tab);
    if (!line.empty()) pieces.push_back(std::move(line));
  }
  return GreedyVocabTokenizer(std::move(name), std::move(pieces));
}

GreedyVocabTokenizer GreedyVocabTokenizer::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name.erase(0, slash + 1);
  return load(in, std::move(name));
}

std::vector<std::string> GreedyVocabTokenizer::tokenize_word(std::string_view word) const {
  // Byte offsets of every codepoint boundary.
  std::vector<std::size_t> bounds;
  std::size_t pos = 0;
  while (pos < word.size()) {
    bounds.push_back(pos);
    text::next_codepoint(word, pos);
  }
  bounds.push_back(word.size());
  const std::size_t n = bounds.size() - 1;

  std::vector<std::string> out;
  std::string probe;
  std::size_t i = 0;
  while (i < n) {
    std::size_t take = 1;
    for (std::size_t len = std::min(max_piece_codepoints_, n - i); len >= 1; --len) {
      probe.assign(word.substr(bounds[i], bounds[i + len] - bounds[i]));
      if (pieces_.count(probe)) {
        take = len;
        break;
      }
    }
    out.emplace_back(word.substr(bounds[i], bounds[i + take] - bounds[i]));
    i += take;
  }
  return out;
}

std::size_t GreedyVocabTokenizer::count_tokens(std::string_view text) const {
  std::size_t n = 0;
  for (auto w : text::split_words(text)) n += tokenize_word(w).size();
  return n;
}

std::vector<std::string_view> segment_words(std::string_view text) {
  return text::split_words(text);
}

// ---------------------------------------------------------------------------

void FertilityAccumulator::add(std::string_view text, const TokenizerAdapter& tok) {
  const std::uint64_t w = text::count_words(text);
  const std::uint64_t t = tok.count_tokens(text);
  words += w;
  tokens += t;
  ++documents;
  if (w > 0) {
    ratio_sum += static_cast<double>(t) / static_cast<double>(w);
    ++ratio_documents;
  }
}

void FertilityAccumulator::merge(const FertilityAccumulator& other) {
  words += other.words;
  tokens += other.tokens;
  documents += other.documents;
  ratio_sum += other.ratio_sum;
  ratio_documents += other.ratio_documents;
}

FertilityReport FertilityAccumulator::finish(std::string tokenizer_name, Averaging averaging) const {
  if (words == 0) throw EmptyCorpusError();
  FertilityReport r;
  r.tokenizer_name = std::move(tokenizer_name);
  r.total_words = words;
  r.total_tokens = tokens;
  r.documents = documents;
  r.averaging = averaging;
  r.fertility = averaging == Averaging::micro
                    ? static_cast<double>(tokens) / static_cast<double>(words)
                    : ratio_sum / static_cast<double>(ratio_documents);
  return r;
}

FertilityReport fertility_serial(std::span<const corpus::Document> corpus,
                                 const TokenizerAdapter& tok, Averaging averaging) {
  FertilityAccumulator acc;
  for (const auto& doc : corpus) acc.add(doc.text, tok);
  return acc.finish(tok.name(), averaging);
}

FertilityReport fertility(std::span<const corpus::Document> corpus, const TokenizerAdapter& tok,
                          Averaging averaging) {
  if (!tok.concurrent_safe()) return fertility_serial(corpus, tok, averaging);
  const auto n = static_cast<std::int64_t>(corpus.size());
  // Per-document counts are integers, so the word/token totals do not
  // depend on the reduction order. The macro ratio sum is accumulated in
  // document order afterwards for the same reason.
  std::vector<std::uint64_t> words(corpus.size());
  std::vector<std::uint64_t> tokens(corpus.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::int64_t i = 0; i < n; ++i) {
    words[i] = text::count_words(corpus[i].text);
    tokens[i] = tok.count_tokens(corpus[i].text);
  }
  FertilityAccumulator acc;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    acc.words += words[i];
    acc.tokens += tokens[i];
    ++acc.documents;
    if (words[i] > 0) {
      acc.ratio_sum += static_cast<double>(tokens[i]) / static_cast<double>(words[i]);
      ++acc.ratio_documents;
    }
  }
  return acc.finish(tok.name(), averaging);
}

std::unique_ptr<TokenizerAdapter> make_tokenizer(std::string_view spec) {
  if (spec == "identity") return std::make_unique<IdentityTokenizer>();
  if (spec == "character" || spec == "char") return std::make_unique<CharacterTokenizer>();
  if (spec.starts_with("vocab:")) {
    return std::make_unique<GreedyVocabTokenizer>(
        GreedyVocabTokenizer::load_file(std::string(spec.substr(6))));
  }
  throw std::invalid_argument("unknown tokenizer: " + std::string(spec));
}

}  // namespace lmdata::tokenization
