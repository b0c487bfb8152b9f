#pragma once

#include <cstddef>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace lmdata::corpus {

enum class Source { culturax, sanad, ebook, other };

std::string_view to_string(Source s);
/// Throws std::invalid_argument for unknown names.
Source parse_source(std::string_view name);

struct Document {
  std::string id;
  std::optional<std::string> url;
  std::string text;
  Source source = Source::other;

  bool operator==(const Document&) const = default;
};

/// Returns true when the document carries a non-blank URL.
bool has_url(const Document& doc);

// ---------------------------------------------------------------------------
// JSONL ingestion

struct Reject {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

using RejectSink = std::function<void(const Reject&)>;

/// Pulls Documents out of a newline-delimited JSON stream one line at a
/// time. Malformed lines are passed to the reject sink and skipped.
class JsonlReader {
 public:
  explicit JsonlReader(std::istream& in, RejectSink on_reject = {});

  /// Returns false at end of stream.
  bool next(Document& out);

  std::size_t lines_read() const { return line_; }
  std::size_t rejected() const { return rejected_; }

 private:
  std::istream& in_;
  RejectSink on_reject_;
  std::size_t line_ = 0;
  std::size_t rejected_ = 0;
  std::string buf_;
};

/// Parses a single JSONL record. On failure returns nullopt and sets `reason`.
std::optional<Document> parse_record(std::string_view line, std::size_t line_number,
                                     std::string& reason);

struct IngestResult {
  std::vector<Document> documents;
  std::vector<Reject> rejects;
};

IngestResult ingest_jsonl(std::istream& in);

std::string to_jsonl(const Document& doc);
std::string to_jsonl(const Reject& r);

// ---------------------------------------------------------------------------
// Character unification

enum class CharMapMode { nfkc_plus_table, table_only };

/// Codepoint replacement table. In nfkc_plus_table mode the built-in NFKC
/// mappings for the Arabic blocks are loaded first and user entries are
/// layered on top; in table_only mode only user entries apply.
///
/// The effective table is closed: no replacement string contains a
/// codepoint that is itself mapped, so applying it is idempotent.
class CharMap {
 public:
  CharMap();  // nfkc_plus_table with no overrides

  /// Throws std::invalid_argument when an override maps into another
  /// overridden codepoint.
  CharMap(CharMapMode mode, std::map<char32_t, std::string> overrides);

  static const CharMap& arabic_default();

  CharMapMode mode() const { return mode_; }
  const std::map<char32_t, std::string>& entries() const { return entries_; }

  /// nullptr when `cp` is not mapped.
  const std::string* lookup(char32_t cp) const;

 private:
  CharMapMode mode_;
  std::map<char32_t, std::string> entries_;
  char32_t min_key_ = 0;
  char32_t max_key_ = 0;
};

/// Number of built-in NFKC entries (for reporting).
std::size_t builtin_compat_entry_count();

std::string normalize_chars(std::string_view text, const CharMap& map);

// ---------------------------------------------------------------------------
// Leading title/date removal

struct HeaderPatterns {
  /// Regexes (ECMAScript) that must match a whole trimmed line after
  /// Arabic-Indic digits were folded to ASCII.
  std::vector<std::string> date_lines;
  /// A title is a non-empty first line with at most this many words.
  std::size_t title_max_words = 15;

  static HeaderPatterns defaults();
};

class TitleDateStripper {
 public:
  explicit TitleDateStripper(HeaderPatterns patterns = HeaderPatterns::defaults());

  /// Number of leading lines (0, 1 or 2) that form a title/date header.
  std::size_t header_lines(std::string_view text) const;

  Document strip(Document doc) const;

  bool is_date_line(std::string_view line) const;

 private:
  HeaderPatterns patterns_;
  std::vector<std::regex> compiled_;
};

Document strip_title_date(Document doc, const TitleDateStripper& stripper);

}  // namespace lmdata::corpus
