#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "lmdata/corpus.hpp"

namespace lmdata::instruct {

enum class Role { human, gpt };
enum class Origin { rephrase_standard, rephrase_mcq, instar, aya };
enum class EnumStyle { latin_letters, arabic_letters, western_digits, arabic_indic_digits };

inline constexpr std::array<EnumStyle, 4> kEnumStyles = {EnumStyle::latin_letters, EnumStyle::arabic_letters,
                                                         EnumStyle::western_digits, EnumStyle::arabic_indic_digits};

std::string_view to_string(Role r);
std::string_view to_string(Origin o);
std::string_view to_string(EnumStyle s);
Origin parse_origin(std::string_view name);
EnumStyle parse_enum_style(std::string_view name);

struct Turn {
  Role from = Role::human;
  std::string value;

  bool operator==(const Turn&) const = default;
};

struct Dialogue {
  std::vector<Turn> turns;
  Origin origin = Origin::rephrase_standard;

  bool operator==(const Dialogue&) const = default;
  std::size_t human_turns() const;
};

enum class RejectReason {
  empty,
  unparseable,
  role_order,
  empty_turn,
  too_short,
  reserved_sequence,
  no_question,
  no_answer,
  too_few_options,
  too_many_options,
  duplicate_options,
  answer_missing,
  mixed_styles,
  option_sequence,
};

std::string_view to_string(RejectReason r);

struct Rejection {
  RejectReason reason = RejectReason::unparseable;
  std::string detail;
};

/// Either a parsed value or the reason it was rejected.
template <class T>
using Parsed = std::variant<T, Rejection>;

/// Checks the dialogue invariants: at least two turns, human first, strictly
/// alternating roles, gpt last, no blank values, no ChatML control markers.
std::optional<Rejection> validate(const Dialogue& d);

// ---------------------------------------------------------------------------
// Multiple-choice items

struct MCQItem {
  std::string question;
  std::vector<std::string> options;
  std::size_t answer_index = 0;
  EnumStyle style = EnumStyle::latin_letters;

  bool operator==(const MCQItem&) const = default;
};

inline constexpr std::size_t kMaxOptions = 5;

/// Option markers in order, e.g. A..E or أ ب ج د هـ.
const std::array<std::string_view, kMaxOptions>& enum_markers(EnumStyle style);

/// Question line(s), one "marker. option" line per option and, when
/// `with_answer`, a final "الإجابة: marker" line.
std::string render_mcq(const MCQItem& item, bool with_answer = true);
MCQItem restyle(MCQItem item, EnumStyle style);

Parsed<MCQItem> parse_mcq(std::string_view text);
/// Items separated by blank lines; any bad item rejects the whole response.
Parsed<std::vector<MCQItem>> parse_mcq_response(std::string_view text);

/// One human/gpt pair per item: the question with options, then the answer.
Dialogue mcq_dialogue(const std::vector<MCQItem>& items);

/// Style of the first option-looking line in `text`, if any.
std::optional<EnumStyle> detect_enum_style(std::string_view text);

// ---------------------------------------------------------------------------
// Rephrasing prompts and responses

/// Splits after sentence-final punctuation (. ! ? ؟ ۔). Sentences are
/// trimmed views into `text`.
std::vector<std::string_view> split_sentences(std::string_view text);

/// Greedily packs consecutive sentences into chunks of at most `max_chars`
/// codepoints. A sentence longer than max_chars is hard-split, preferring
/// whitespace. Chunks are slices of the original text.
std::vector<std::string> chunk_document(std::string_view text, std::size_t max_chars);

enum class Template { standard, mcq };

/// Prompt templates with "{chunk}" and "{exemplar}" placeholders.
struct PromptTemplates {
  std::string version = "v1";
  std::string standard;
  std::string mcq;

  static const PromptTemplates& defaults();
};

/// Weighted draw of an enumeration style from a seed.
EnumStyle pick_style(std::uint64_t seed, const std::array<double, 4>& weights);

/// Standard prompts embed the chunk; MCQ prompts also embed the exemplar,
/// restyled with a seeded style when `style_seed` is set. Throws
/// std::invalid_argument for an MCQ prompt without exemplar.
std::string build_prompt(std::string_view chunk, Template tmpl, const MCQItem* exemplar,
                         std::optional<std::uint64_t> style_seed = std::nullopt,
                         const PromptTemplates& templates = PromptTemplates::defaults());

/// Reads "سؤال:/جواب:" (or Question:/Answer:, Q:/A:) labelled lines into
/// alternating turns. Unlabelled lines continue the current turn; text
/// before the first label is ignored.
Parsed<Dialogue> parse_dialogue_response(std::string_view text);

struct FilterReport {
  std::size_t input = 0;
  std::size_t kept = 0;
  std::map<RejectReason, std::size_t> rejected;

  std::size_t rejected_total() const;
};

struct FilterResult {
  std::vector<Dialogue> kept;
  FilterReport report;
};

/// Keeps dialogues that parse and satisfy every invariant.
FilterResult filter_dialogues(std::vector<Parsed<Dialogue>> candidates);

// ---------------------------------------------------------------------------
// ChatML

inline constexpr std::string_view kImStart = "<|im_start|>";
inline constexpr std::string_view kImEnd = "<|im_end|>";

class ChatmlError : public std::runtime_error {
 public:
  ChatmlError(RejectReason reason, const std::string& msg) : std::runtime_error(msg), reason_(reason) {}
  RejectReason reason() const { return reason_; }

 private:
  RejectReason reason_;
};

/// "<|im_start|>{user|assistant}\n{value}<|im_end|>\n" per turn. Throws
/// ChatmlError for invalid dialogues, including values that contain a
/// control marker (reason reserved_sequence).
std::string render_chatml(const Dialogue& d);
/// Exact inverse of render_chatml; throws ChatmlError on malformed input.
Dialogue parse_chatml(std::string_view text, Origin origin);

// ---------------------------------------------------------------------------
// Statistics

struct DatasetStats {
  std::size_t total = 0;
  std::map<Origin, std::size_t> per_origin_counts;
  /// origin -> number of human turns -> dialogues
  std::map<Origin, std::map<std::size_t, std::size_t>> turn_histogram;
  /// origin -> style -> dialogues (only dialogues with enumerated options)
  std::map<Origin, std::map<EnumStyle, std::size_t>> enum_style_histogram;
};

DatasetStats dataset_stats(std::span<const Dialogue> dialogues);
nlohmann::json to_json(const DatasetStats& s);
nlohmann::json to_json(const FilterReport& r);

// ---------------------------------------------------------------------------
// Generation

class GeneratorAdapter {
 public:
  virtual ~GeneratorAdapter() = default;
  virtual std::string generate(std::string_view prompt, std::uint64_t seed) const = 0;
  virtual std::string name() const = 0;
  virtual bool concurrent_safe() const { return true; }
};

struct MockGeneratorConfig {
  /// Fraction of responses that are deliberately malformed.
  double malformed_rate = 0.1;
  /// Probability of 1, 2, 3, 4 question/answer pairs.
  std::array<double, 4> standard_pairs = {0.15, 0.6, 0.2, 0.05};
  std::array<double, 4> mcq_items = {0.75, 0.2, 0.05, 0.0};
};

/// Offline stand-in for an instruction-tuned model. Works with the default
/// templates: it reads the chunk between the "---" fences and answers in
/// the requested format. Output depends only on (prompt, seed).
class MockGenerator final : public GeneratorAdapter {
 public:
  explicit MockGenerator(MockGeneratorConfig cfg = {}) : cfg_(cfg) {}
  std::string generate(std::string_view prompt, std::uint64_t seed) const override;
  std::string name() const override { return "mock"; }

 private:
  MockGeneratorConfig cfg_;
};

struct FactoryConfig {
  std::size_t max_chars = 600;
  double mcq_fraction = 0.5;
  std::uint64_t seed = 42;
  /// latin letters, Arabic letters, Western digits, Arabic-Indic digits
  std::array<double, 4> style_weights = {0.6, 0.1, 0.15, 0.15};
  PromptTemplates templates = PromptTemplates::defaults();
  MCQItem exemplar = default_exemplar();

  static MCQItem default_exemplar();
};

struct FactoryRecord {
  std::string id;
  Dialogue dialogue;
};

struct FactoryResult {
  std::vector<FactoryRecord> records;
  FilterReport report;
  std::size_t prompts = 0;
};

/// Chunks every document, prompts the generator for each chunk (standard or
/// MCQ by a seeded draw), parses and filters the responses. Documents are
/// ordered by id and records by (doc id, chunk index), independent of
/// thread count.
FactoryResult build_synthetic(std::span<const corpus::Document> docs, const GeneratorAdapter& gen,
                              const FactoryConfig& cfg);

/// {"id","origin","text"} with the ChatML transcript in "text".
std::string to_jsonl(const FactoryRecord& r);
/// Inverse of to_jsonl.
FactoryRecord record_from_jsonl(std::string_view line);

/// Reads one instruction-dataset record: an array of {"from","value"}, an
/// object with a "conversations" array, or a single pair
/// ({"instruction","output"} / {"inputs","targets"}) as a 2-turn dialogue.
Parsed<Dialogue> dialogue_from_json(const nlohmann::json& j, Origin origin);

}  // namespace lmdata::instruct
