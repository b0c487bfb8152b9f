#include "lmdata/corpus.hpp"

#include <algorithm>
#include <array>

#include "json.hpp"
#include "lmdata/text.hpp"

namespace lmdata::corpus {

using nlohmann::json;

namespace {

struct CompatEntry {
  char32_t cp;
  const char* utf8;
};

constexpr CompatEntry kCompatTable[] = {
#include "arabic_compat_table.inc"
};

constexpr std::array<std::string_view, 4> kSourceNames = {"culturax", "sanad", "ebook", "other"};

}  // namespace

std::string_view to_string(Source s) { return kSourceNames[static_cast<std::size_t>(s)]; }

Source parse_source(std::string_view name) {
  for (std::size_t i = 0; i < kSourceNames.size(); ++i) {
    if (kSourceNames[i] == name) return static_cast<Source>(i);
  }
  throw std::invalid_argument("unknown source: " + std::string(name));
}

bool has_url(const Document& doc) { return doc.url && !text::trim(*doc.url).empty(); }

// ---------------------------------------------------------------------------

std::optional<Document> parse_record(std::string_view line, std::size_t line_number,
                                     std::string& reason) {
  if (text::trim(line).empty()) {
    reason = "empty_record";
    return std::nullopt;
  }
  if (!text::is_valid_utf8(line)) {
    reason = "invalid_utf8";
    return std::nullopt;
  }
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded()) {
    reason = "malformed_json";
    return std::nullopt;
  }
  if (!j.is_object()) {
    reason = "not_an_object";
    return std::nullopt;
  }
  auto text_it = j.find("text");
  if (text_it == j.end()) {
    reason = "missing_text";
    return std::nullopt;
  }
  if (!text_it->is_string()) {
    reason = "text_not_string";
    return std::nullopt;
  }
  Document doc;
  doc.text = text_it->get<std::string>();

  if (auto it = j.find("id"); it != j.end() && !it->is_null()) {
    if (it->is_string()) {
      doc.id = it->get<std::string>();
    } else if (it->is_number_integer()) {
      doc.id = it->dump();
    } else {
      reason = "id_not_string";
      return std::nullopt;
    }
  }
  if (doc.id.empty()) doc.id = std::to_string(line_number);

  if (auto it = j.find("url"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      reason = "url_not_string";
      return std::nullopt;
    }
    std::string url = it->get<std::string>();
    if (!text::trim(url).empty()) doc.url = std::move(url);
  }
  if (auto it = j.find("source"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) {
      reason = "source_not_string";
      return std::nullopt;
    }
    try {
      doc.source = parse_source(it->get<std::string>());
    } catch (const std::invalid_argument&) {
      reason = "unknown_source";
      return std::nullopt;
    }
  }
  return doc;
}

JsonlReader::JsonlReader(std::istream& in, RejectSink on_reject)
    : in_(in), on_reject_(std::move(on_reject)) {}

bool JsonlReader::next(Document& out) {
  std::string reason;
  while (std::getline(in_, buf_)) {
    ++line_;
    if (auto doc = parse_record(buf_, line_, reason)) {
      out = std::move(*doc);
      return true;
    }
    ++rejected_;
    if (on_reject_) on_reject_(Reject{line_, reason});
  }
  return false;
}

IngestResult ingest_jsonl(std::istream& in) {
  IngestResult result;
  JsonlReader reader(in, [&](const Reject& r) { result.rejects.push_back(r); });
  Document doc;
  while (reader.next(doc)) result.documents.push_back(std::move(doc));
  return result;
}

std::string to_jsonl(const Document& doc) {
  json j;
  j["id"] = doc.id;
  j["source"] = to_string(doc.source);
  j["text"] = doc.text;
  j["url"] = doc.url ? json(*doc.url) : json(nullptr);
  return j.dump();
}

std::string to_jsonl(const Reject& r) {
  json j;
  j["line"] = r.line;
  j["reason"] = r.reason;
  return j.dump();
}

// ---------------------------------------------------------------------------

std::size_t builtin_compat_entry_count() { return std::size(kCompatTable); }

namespace {

std::string apply_entries(std::string_view s, const std::map<char32_t, std::string>& entries) {
  std::string out;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t at = pos;
    const char32_t cp = text::next_codepoint(s, pos);
    if (auto it = entries.find(cp); it != entries.end()) {
      out += it->second;
    } else {
      out.append(s.substr(at, pos - at));
    }
  }
  return out;
}

bool contains_key(std::string_view s, const std::map<char32_t, std::string>& entries) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (entries.count(text::next_codepoint(s, pos))) return true;
  }
  return false;
}

}  // namespace

CharMap::CharMap() : CharMap(CharMapMode::nfkc_plus_table, {}) {}

CharMap::CharMap(CharMapMode mode, std::map<char32_t, std::string> overrides) : mode_(mode) {
  for (const auto& [cp, repl] : overrides) {
    if (!text::is_valid_utf8(repl)) {
      throw std::invalid_argument("char map replacement is not valid UTF-8");
    }
    if (contains_key(repl, overrides)) {
      throw std::invalid_argument("char map entry for U+" + std::to_string(cp) +
                                  " maps into another mapped codepoint");
    }
  }
  if (mode_ == CharMapMode::nfkc_plus_table) {
    // Built-in outputs are passed through the overrides so the combined
    // table stays closed (e.g. an alef-hamza override also catches the
    // presentation forms that decompose to alef-hamza).
    for (const auto& e : kCompatTable) {
      if (overrides.count(e.cp)) continue;
      entries_.emplace(e.cp, apply_entries(e.utf8, overrides));
    }
  }
  for (auto& [cp, repl] : overrides) entries_.insert_or_assign(cp, std::move(repl));
  std::erase_if(entries_, [](const auto& kv) {
    std::string self;
    text::append_utf8(self, kv.first);
    return kv.second == self;
  });
  for (const auto& [cp, repl] : entries_) {
    if (contains_key(repl, entries_)) {
      throw std::invalid_argument("char map is not closed at U+" + std::to_string(cp));
    }
  }
  if (!entries_.empty()) {
    min_key_ = entries_.begin()->first;
    max_key_ = entries_.rbegin()->first;
  }
}

const CharMap& CharMap::arabic_default() {
  static const CharMap instance;
  return instance;
}

const std::string* CharMap::lookup(char32_t cp) const {
  if (entries_.empty() || cp < min_key_ || cp > max_key_) return nullptr;
  auto it = entries_.find(cp);
  return it == entries_.end() ? nullptr : &it->second;
}

std::string normalize_chars(std::string_view s, const CharMap& map) {
  std::string out;
  out.reserve(s.size());
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto lead = static_cast<unsigned char>(s[pos]);
    if (lead < 0x80) {
      if (const std::string* repl = map.lookup(lead)) {
        out += *repl;
      } else {
        out.push_back(s[pos]);
      }
      ++pos;
      continue;
    }
    const std::size_t at = pos;
    const char32_t cp = text::next_codepoint(s, pos);
    if (const std::string* repl = map.lookup(cp)) {
      out += *repl;
    } else {
      out.append(s.substr(at, pos - at));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

HeaderPatterns HeaderPatterns::defaults() {
  HeaderPatterns p;
  const std::string time = R"((?:[ T,]+\d{1,2}:\d{2}(?::\d{2})?(?:\s*[AaPp][Mm])?)?)";
  p.date_lines = {
      // 2023-04-01, 2023/4/1, 2023.04.01
      R"(\d{4}[-/.]\d{1,2}[-/.]\d{1,2})" + time,
      // 01/04/2023, 1-4-2023, 01.04.2023
      R"(\d{1,2}[-/.]\d{1,2}[-/.]\d{4})" + time,
  };
  return p;
}

TitleDateStripper::TitleDateStripper(HeaderPatterns patterns) : patterns_(std::move(patterns)) {
  compiled_.reserve(patterns_.date_lines.size());
  for (const auto& p : patterns_.date_lines) {
    compiled_.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
  }
}

bool TitleDateStripper::is_date_line(std::string_view line) const {
  std::string folded = text::fold_digits(text::trim(line));
  if (folded.empty() || folded.size() > 64) return false;
  return std::any_of(compiled_.begin(), compiled_.end(),
                     [&](const std::regex& re) { return std::regex_match(folded, re); });
}

namespace {

// Byte offset just past the n-th newline, or npos.
std::size_t after_lines(std::string_view text, std::size_t n) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) return text.size();
    pos = nl + 1;
  }
  return pos;
}

std::string_view line_at(std::string_view text, std::size_t start) {
  std::size_t nl = text.find('\n', start);
  std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace

std::size_t TitleDateStripper::header_lines(std::string_view text) const {
  if (text.empty()) return 0;
  std::string_view first = line_at(text, 0);
  if (is_date_line(first)) return 1;
  const std::size_t second_start = after_lines(text, 1);
  if (second_start >= text.size()) return 0;
  std::string_view title = text::trim(first);
  if (title.empty() || text::count_words(title) > patterns_.title_max_words) return 0;
  if (is_date_line(line_at(text, second_start))) return 2;
  return 0;
}

Document TitleDateStripper::strip(Document doc) const {
  const std::size_t n = header_lines(doc.text);
  if (n > 0) doc.text.erase(0, after_lines(doc.text, n));
  return doc;
}

Document strip_title_date(Document doc, const TitleDateStripper& stripper) {
  return stripper.strip(std::move(doc));
}

}  // namespace lmdata::corpus
