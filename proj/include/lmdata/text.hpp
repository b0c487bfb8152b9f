#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lmdata::text {

inline constexpr char32_t kReplacementChar = 0xFFFD;

bool is_valid_utf8(std::string_view s);

/// Decodes one codepoint starting at `pos` and advances `pos`. Invalid
/// sequences consume a single byte and yield U+FFFD.
char32_t next_codepoint(std::string_view s, std::size_t& pos);

void append_utf8(std::string& out, char32_t cp);
std::u32string decode(std::string_view s);
std::string encode(std::u32string_view s);

std::size_t codepoint_count(std::string_view s);

/// Unicode White_Space property.
bool is_space(char32_t cp);

bool is_ascii_alnum(char32_t cp);
bool is_ascii_letter(char32_t cp);

/// Letters of the Arabic script blocks (base letters, not marks or digits).
bool is_arabic_letter(char32_t cp);
/// Harakat, shadda, superscript alef and the Quranic annotation marks.
bool is_arabic_mark(char32_t cp);
/// Arabic-Indic (U+0660..0669) and Extended Arabic-Indic (U+06F0..06F9) digits.
bool is_arabic_digit(char32_t cp);
/// Value 0..9 for ASCII or Arabic-Indic digits, -1 otherwise.
int digit_value(char32_t cp);

/// Generic punctuation test used by the quality heuristics: ASCII
/// punctuation, Arabic punctuation and General Punctuation block.
bool is_punctuation(char32_t cp);

/// Splits on whitespace; words are maximal non-whitespace runs. Views
/// point into `s`.
std::vector<std::string_view> split_words(std::string_view s);
std::size_t count_words(std::string_view s);

std::string_view trim(std::string_view s);

/// Splits on '\n'. A trailing '\r' is removed from each line. A final
/// empty segment after a terminating newline is not returned.
std::vector<std::string_view> split_lines(std::string_view s);

/// ASCII-only lower-casing; other bytes pass through untouched.
std::string ascii_lower(std::string_view s);

/// Maps Arabic-Indic digits to ASCII digits, leaving everything else.
std::string fold_digits(std::string_view s);

/// Stable 64-bit FNV-1a, used wherever a seed is derived from text.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// splitmix64 finalizer for combining seeds.
std::uint64_t mix64(std::uint64_t x);

/// Small deterministic generator; the same seed gives the same stream on
/// every platform (unlike the std distributions).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return mix64(state_++); }
  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  /// Uniform in [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::uint64_t state_;
};

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace lmdata::text
