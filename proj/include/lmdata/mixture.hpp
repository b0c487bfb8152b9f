#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lmdata/corpus.hpp"
#include "lmdata/tokenization.hpp"

namespace lmdata::mixture {

enum class Language { arabic, english, other };

std::string_view to_string(Language l);
Language parse_language(std::string_view name);

struct SourceStats {
  std::string name;
  std::uint64_t tokens = 0;
  Language language = Language::other;
};

class MixtureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// fraction_i = upweight_i / sum(upweight). Groups without an upweight
/// entry get 1. Throws on empty groups, non-positive weights, or
/// upweights for languages that are not in `groups`.
std::map<Language, double> sampling_percentages(const std::map<Language, double>& upweights,
                                                const std::map<Language, std::uint64_t>& groups);

/// Token totals per language.
std::map<Language, std::uint64_t> group_tokens(const std::vector<SourceStats>& sources);

/// Share of all tokens held by each language.
std::map<Language, double> token_shares(const std::vector<SourceStats>& sources);

/// Splits language-level sampling fractions across that language's sources
/// in proportion to their token counts.
std::map<std::string, double> source_fractions(const std::vector<SourceStats>& sources,
                                               const std::map<Language, double>& language_fractions);

/// Upweight that offsets a tokenizer's extra fertility on one language
/// relative to another.
double suggested_upweight(double fertility_target, double fertility_reference);

struct SourcePlan {
  std::string name;
  Language language = Language::other;
  std::uint64_t tokens = 0;
  double sampling_fraction = 0.0;
  std::uint64_t token_quota = 0;
  /// token_quota / tokens; above 1 means the source repeats.
  double epochs = 0.0;
};

struct MixturePlan {
  std::vector<SourcePlan> sources;
  std::uint64_t total_tokens = 0;
  std::uint64_t seed = 0;
};

/// Quotas use the largest-remainder method so they sum to total_tokens
/// exactly. Sources missing from `fractions` get fraction 0.
MixturePlan plan_mixture(const std::vector<SourceStats>& sources,
                         const std::map<std::string, double>& fractions, std::uint64_t total_tokens,
                         std::uint64_t seed);

nlohmann::json to_json(const MixturePlan& plan);
/// Group-level table: language,tokens,token_pct,sampling_pct plus a total row.
std::string group_table_csv(const std::vector<SourceStats>& sources,
                            const std::map<Language, double>& sampling);
/// Per-source table: source,language,tokens,sampling_fraction,token_quota,epochs.
std::string plan_csv(const MixturePlan& plan);

std::vector<SourceStats> sources_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Streaming

/// A pull-based document stream that may support restarting from the top.
class DocumentStream {
 public:
  virtual ~DocumentStream() = default;
  virtual bool next(corpus::Document& out) = 0;
  /// Returns false when the stream cannot be restarted.
  virtual bool restart() = 0;
};

class VectorStream final : public DocumentStream {
 public:
  explicit VectorStream(std::vector<corpus::Document> docs, bool restartable = true)
      : docs_(std::move(docs)), restartable_(restartable) {}

  bool next(corpus::Document& out) override;
  bool restart() override;

 private:
  std::vector<corpus::Document> docs_;
  bool restartable_;
  std::size_t pos_ = 0;
};

class StreamExhaustedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Seeded interleaving of the source streams. At each step a source is
/// drawn with probability proportional to its remaining quota; a source
/// stops once its realised token count reaches its quota. Document sizes
/// are measured with `tok`.
class MixtureSampler {
 public:
  MixtureSampler(const MixturePlan& plan, std::map<std::string, DocumentStream*> streams,
                 const tokenization::TokenizerAdapter& tok);

  /// Returns false once every quota is met.
  bool next(corpus::Document& out, std::string* source_name = nullptr);

  const std::map<std::string, std::uint64_t>& realized_tokens() const { return realized_; }

 private:
  struct Slot {
    std::string name;
    std::uint64_t quota = 0;
    DocumentStream* stream = nullptr;
  };
  std::vector<Slot> slots_;
  std::map<std::string, std::uint64_t> realized_;
  const tokenization::TokenizerAdapter& tok_;
  std::uint64_t rng_state_;
};

std::vector<corpus::Document> sample_stream(const MixturePlan& plan,
                                            std::map<std::string, DocumentStream*> streams,
                                            const tokenization::TokenizerAdapter& tok);

}  // namespace lmdata::mixture
