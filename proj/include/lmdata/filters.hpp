#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lmdata/corpus.hpp"
#include "lmdata/tokenization.hpp"

namespace lmdata::filters {

using corpus::Document;
using corpus::Source;

/// Cleaning rules in the order they are applied. `none` means kept.
enum class Rule { safety, ads, lines, chars, gopher, none };

inline constexpr std::array<Rule, 5> kRuleOrder = {Rule::safety, Rule::ads, Rule::lines,
                                                   Rule::chars, Rule::gopher};

std::string_view to_string(Rule r);
Rule parse_rule(std::string_view name);

/// How phrase hits are counted against a threshold.
enum class PhraseCounting { distinct, occurrences };

struct GopherConfig {
  std::size_t min_words = 50;
  std::size_t max_words = 100000;
  double min_mean_word_len = 2.0;
  double max_mean_word_len = 10.0;
  /// ('#' + ellipsis occurrences) / words
  double max_symbol_to_word_ratio = 0.1;
  /// Fraction of words containing at least one Arabic or Latin letter.
  double min_alpha_word_frac = 0.8;
  std::vector<std::string> stop_words;
  std::size_t min_stop_words = 2;
  /// Punctuation codepoints / non-whitespace codepoints.
  double max_punct_char_frac = 0.2;

  static std::vector<std::string> default_arabic_stop_words();
};

struct FilterConfig {
  std::vector<std::string> unsafe_phrases;
  std::size_t unsafe_min_hits = 3;
  PhraseCounting unsafe_counting = PhraseCounting::distinct;
  bool require_url = true;
  /// Sources the safety rule (phrases and URL check) applies to.
  std::set<Source> safety_sources = {Source::culturax};

  std::vector<std::string> ad_phrases;
  std::size_t ad_max_hits = 5;
  PhraseCounting ad_counting = PhraseCounting::occurrences;

  std::size_t min_lines = 4;
  /// A line is short when it has fewer than this many words.
  std::size_t short_line_word_max = 3;
  double short_line_frac_max = 0.5;

  double permissible_char_min_frac = 0.95;
  /// Punctuation allowed by the character rule, on top of Arabic letters,
  /// marks and digits, ASCII alphanumerics and whitespace.
  std::string permissible_punctuation;

  GopherConfig gopher;

  static FilterConfig defaults();
  /// Throws std::invalid_argument on out-of-range values or empty phrases.
  void validate() const;
};

/// Reads a FilterConfig from JSON. Keys mirror the field names; missing
/// keys keep their defaults. Unknown keys are an error.
FilterConfig filter_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FilterConfig& cfg);

struct FilterDecision {
  bool keep = true;
  Rule rule = Rule::none;
  std::string detail;

  static FilterDecision kept() { return {}; }
  static FilterDecision removed(Rule r, std::string detail) { return {false, r, std::move(detail)}; }
};

/// Configuration with phrase lists normalised and lower-cased once, ready to
/// be applied to many documents from many threads.
class CompiledFilters {
 public:
  explicit CompiledFilters(FilterConfig cfg, const corpus::CharMap& map = corpus::CharMap::arabic_default());

  const FilterConfig& config() const { return cfg_; }

  FilterDecision apply(const Document& doc, Rule rule) const;
  /// Applies all rules in order and reports the first failure.
  FilterDecision apply_all(const Document& doc) const;

  std::size_t count_unsafe(std::string_view text) const;
  std::size_t count_ads(std::string_view text) const;

 private:
  FilterDecision safety(const Document& doc) const;
  FilterDecision ads(const Document& doc) const;
  FilterDecision lines(const Document& doc) const;
  FilterDecision chars(const Document& doc) const;
  FilterDecision gopher(const Document& doc) const;

  FilterConfig cfg_;
  std::vector<std::string> unsafe_;
  std::vector<std::string> ads_;
  std::set<std::string> stop_words_;
  std::u32string permissible_punct_;
};

FilterDecision apply_filter(const Document& doc, Rule rule, const CompiledFilters& filters);

// ---------------------------------------------------------------------------
// Reports

struct SourceCounts {
  std::uint64_t docs_in = 0;
  std::uint64_t tokens_in = 0;
  std::uint64_t docs_out = 0;
  std::uint64_t tokens_out = 0;
  /// Raw minus cleaned tokens over kept documents (character unification and
  /// header removal). Signed: unification may expand ligatures.
  std::int64_t tokens_edit_delta = 0;
  /// Indexed like kRuleOrder.
  std::array<std::uint64_t, kRuleOrder.size()> docs_removed{};
  std::array<std::uint64_t, kRuleOrder.size()> tokens_removed{};

  bool operator==(const SourceCounts&) const = default;
};

class ReportSchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Before/after counts per source and per rule.
struct CleaningReport {
  std::string tokenizer;
  std::vector<std::string> rules = {"safety", "ads", "lines", "chars", "gopher"};
  std::map<Source, SourceCounts> sources;

  static CleaningReport empty(std::string tokenizer) {
    CleaningReport r;
    r.tokenizer = std::move(tokenizer);
    return r;
  }

  SourceCounts total() const;
  std::uint64_t docs_removed(Rule rule) const;

  bool operator==(const CleaningReport&) const = default;
};

/// Counter-wise sum. Throws ReportSchemaError when the rule lists or
/// tokenizers differ.
CleaningReport merge_reports(const CleaningReport& a, const CleaningReport& b);

nlohmann::json to_json(const CleaningReport& r);
CleaningReport report_from_json(const nlohmann::json& j);
/// dataset,tokens_before,docs_before,tokens_after,tokens_kept_pct,docs_after,docs_kept_pct
std::string to_table_csv(const CleaningReport& r);

// ---------------------------------------------------------------------------
// Pipeline

struct Pipeline {
  CompiledFilters filters;
  corpus::CharMap char_map;
  corpus::TitleDateStripper stripper;

  explicit Pipeline(FilterConfig cfg, corpus::CharMap map = corpus::CharMap::arabic_default(),
                    corpus::HeaderPatterns headers = corpus::HeaderPatterns::defaults())
      : filters(std::move(cfg), map), char_map(std::move(map)), stripper(std::move(headers)) {}
};

/// Outcome for one document: the cleaned text and the verdict.
struct DocumentOutcome {
  Document cleaned;
  FilterDecision decision;
  std::uint64_t raw_tokens = 0;
  std::uint64_t clean_tokens = 0;
};

/// Builds a pipeline from a cleaning config: FilterConfig keys plus optional
/// "char_map" {"mode", "overrides": {"U+FEFB": "..."}} and
/// "header_patterns" {"date_lines": [...], "title_max_words": n}.
Pipeline pipeline_from_json(const nlohmann::json& j);

/// normalize_chars -> strip_title_date -> rules.
DocumentOutcome process_document(const Document& doc, const Pipeline& pipe,
                                 const tokenization::TokenizerAdapter& tok);

struct PipelineResult {
  std::vector<Document> kept;
  CleaningReport report;
  /// Parallel to the input.
  std::vector<FilterDecision> decisions;
};

/// Documents are processed in parallel with OpenMP; outputs and report are
/// identical to run_pipeline_reference.
PipelineResult run_pipeline(std::span<const Document> docs, const Pipeline& pipe,
                            const tokenization::TokenizerAdapter& tok);

/// Plain sequential loop, kept as the reference for run_pipeline.
PipelineResult run_pipeline_reference(std::span<const Document> docs, const Pipeline& pipe,
                                      const tokenization::TokenizerAdapter& tok);

}  // namespace lmdata::filters
