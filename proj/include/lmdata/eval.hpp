#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lmdata/tokenization.hpp"

namespace lmdata::eval {

struct BenchmarkItem {
  std::string id;
  std::string question;
  std::vector<std::string> choices;
  std::size_t gold_index = 0;
  std::optional<std::string> category;
  std::optional<std::string> context;

  /// Throws std::invalid_argument unless 2..5 non-empty choices and
  /// gold_index < choices.size().
  void validate() const;
};

inline constexpr std::string_view kUncategorized = "uncategorized";

/// JSON array of items. Validates every item; ids default to the array index.
std::vector<BenchmarkItem> items_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BenchmarkItem& item);

class ScorerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  /// log P(continuation | context).
  virtual double loglikelihood(std::string_view context, std::string_view continuation) const = 0;
  virtual std::string name() const = 0;
  virtual bool concurrent_safe() const { return true; }
};

class ConstantScorer final : public Scorer {
 public:
  explicit ConstantScorer(double value = -1.0) : value_(value) {}
  double loglikelihood(std::string_view, std::string_view) const override { return value_; }
  std::string name() const override { return "constant"; }

 private:
  double value_;
};

/// Score given to continuations an oracle rules out.
inline constexpr double kOracleReject = -1e9;

/// Knows the gold continuation for each registered context. The gold
/// continuation scores 0 and every other kOracleReject; the anti-oracle
/// swaps the two. A context that is not registered is looked up again by
/// its final block (the text after the last blank line), which is how
/// few-shot prompts are matched. Unknown contexts throw ScorerError.
class OracleScorer final : public Scorer {
 public:
  OracleScorer(std::map<std::string, std::string> gold_by_context, bool anti);
  double loglikelihood(std::string_view context, std::string_view continuation) const override;
  std::string name() const override { return anti_ ? "anti-oracle" : "oracle"; }

 private:
  std::map<std::string, std::string, std::less<>> gold_;
  bool anti_;
};

/// Character trigram model with add-k smoothing over codepoints.
class NgramScorer final : public Scorer {
 public:
  explicit NgramScorer(std::string_view training_text, double k = 0.1);
  static NgramScorer from_default_corpus();
  static NgramScorer from_file(const std::string& path, double k = 0.1);

  double loglikelihood(std::string_view context, std::string_view continuation) const override;
  std::string name() const override { return "ngram"; }
  double log_prob(char32_t a, char32_t b, char32_t c) const;

 private:
  static std::uint64_t key2(char32_t a, char32_t b) { return (std::uint64_t{a} << 32) | b; }

  double k_;
  double vocab_;
  std::map<std::uint64_t, double> history_counts_;
  std::map<std::pair<std::uint64_t, char32_t>, double> trigram_counts_;
};

/// Embedded mini-corpus the default n-gram scorer is trained on.
std::string_view default_ngram_corpus();

struct PromptFormat {
  std::string answer_cue = "الإجابة:";
  /// Prepended to every candidate continuation.
  std::string continuation_prefix = " ";
};

/// [context "\n"] question "\n" answer_cue
std::string render_cf_context(const BenchmarkItem& item, const PromptFormat& fmt = {});
/// [context "\n"] question, one "L. choice" line per choice, answer_cue.
std::string render_mcf_context(const BenchmarkItem& item, std::span<const std::string> letters,
                               const PromptFormat& fmt = {});

enum class Norm { none, by_bytes, by_tokens };
enum class Metric { accuracy, accuracy_norm, f1_macro };
enum class Format { cf, mcf };

Norm parse_norm(std::string_view name);
std::string_view to_string(Norm n);
std::string_view to_string(Metric m);
std::string_view to_string(Format f);

std::vector<std::string> default_letters();

struct ItemOutcome {
  std::string id;
  std::string category;
  std::size_t gold = 0;
  std::size_t prediction = 0;
  bool correct = false;
  bool tie = false;
  bool errored = false;
  std::string error;
  std::vector<double> scores;  // after normalization
};

struct CategoryCounts {
  std::size_t n = 0;
  std::size_t correct = 0;
};

struct EvalResult {
  Metric metric = Metric::accuracy;
  Format format = Format::cf;
  double overall = 0.0;
  std::map<std::string, double> per_category;
  std::map<std::string, CategoryCounts> category_counts;
  std::size_t n = 0;
  std::size_t correct = 0;
  std::size_t errored = 0;
  std::size_t ties = 0;
  std::vector<ItemOutcome> outcomes;
};

nlohmann::json to_json(const EvalResult& r, bool with_outcomes = false);

struct CfOptions {
  Norm norm = Norm::none;
  PromptFormat format;
  /// Used by Norm::by_tokens; identity (word count) when null.
  const tokenization::TokenizerAdapter* tokenizer = nullptr;
  bool parallel = true;
};

struct McfOptions {
  std::vector<std::string> letters = default_letters();
  PromptFormat format;
  bool parallel = true;
};

EvalResult evaluate_cf(std::span<const BenchmarkItem> items, const Scorer& scorer, const CfOptions& opts = {});
/// Throws std::invalid_argument if an item has more choices than letters.
EvalResult evaluate_mcf(std::span<const BenchmarkItem> items, const Scorer& scorer, const McfOptions& opts = {});

struct TrueFalseOptions {
  std::size_t shots = 5;
  std::uint64_t seed = 42;
  /// True and false labels; items must use exactly these as choices.
  std::vector<std::string> labels = {"صح", "خطأ"};
  PromptFormat format;
  bool parallel = true;
};

/// Exemplar block: "question\nanswer_cue label".
std::string render_tf_exemplar(const BenchmarkItem& item, const PromptFormat& fmt = {});
/// Query block: "question\nanswer_cue".
std::string render_tf_query(const BenchmarkItem& item, const PromptFormat& fmt = {});
/// Exemplar indices into `pool` for one item, drawn without replacement.
std::vector<std::size_t> pick_exemplars(const BenchmarkItem& item, std::size_t pool_size, const TrueFalseOptions& opts);
/// Exemplar blocks and the query block joined by blank lines.
std::string render_tf_context(const BenchmarkItem& item, std::span<const BenchmarkItem> pool,
                              const TrueFalseOptions& opts);

/// Few-shot evaluation scored with f1_macro over the two labels. Throws
/// std::invalid_argument when the pool has fewer than `shots` items, shares
/// an id with `items`, or an item's choices differ from the labels.
EvalResult evaluate_true_false(std::span<const BenchmarkItem> items, std::span<const BenchmarkItem> pool,
                               const Scorer& scorer, const TrueFalseOptions& opts = {});

/// Mean of per-label F1. A label absent from both golds and preds counts as
/// F1 = 0, or is left out of the mean when `exclude_absent`.
double f1_macro(std::span<const std::string> golds, std::span<const std::string> preds,
                std::span<const std::string> labels, bool exclude_absent = false);

/// Gold continuations (prefix included) keyed by the contexts the
/// evaluators render; feed these to OracleScorer. Throws
/// std::invalid_argument when two items render the same context with
/// different gold answers.
std::map<std::string, std::string> cf_gold_map(std::span<const BenchmarkItem> items, const PromptFormat& fmt = {});
std::map<std::string, std::string> mcf_gold_map(std::span<const BenchmarkItem> items,
                                                std::span<const std::string> letters, const PromptFormat& fmt = {});
/// Keyed by the query block only.
std::map<std::string, std::string> tf_gold_map(std::span<const BenchmarkItem> items, const PromptFormat& fmt = {});

struct DiffRow {
  std::string model;
  double cf = 0.0;
  double mcf = 0.0;
  double diff = 0.0;
};

DiffRow diff_row(std::string model, const EvalResult& cf, const EvalResult& mcf);
/// "model,cf,mcf,diff" with shortest round-trip decimals.
std::string diff_csv(std::span<const DiffRow> rows);

}  // namespace lmdata::eval
