#include "lmdata/filters.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lmdata/text.hpp"

namespace lmdata::filters {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 6> kRuleNames = {"safety", "ads",    "lines",
                                                        "chars",  "gopher", "none"};

std::size_t rule_index(Rule r) { return static_cast<std::size_t>(r); }

std::size_t count_occurrences(std::string_view hay, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string_view::npos;
       pos = hay.find(needle, pos + needle.size())) {
    ++n;
  }
  return n;
}

std::size_t count_hits(std::string_view lowered, const std::vector<std::string>& phrases,
                       PhraseCounting mode) {
  std::size_t hits = 0;
  for (const auto& p : phrases) {
    if (mode == PhraseCounting::distinct) {
      hits += lowered.find(p) != std::string_view::npos ? 1 : 0;
    } else {
      hits += count_occurrences(lowered, p);
    }
  }
  return hits;
}

std::string_view counting_name(PhraseCounting c) {
  return c == PhraseCounting::distinct ? "distinct" : "occurrences";
}

PhraseCounting parse_counting(std::string_view s) {
  if (s == "distinct") return PhraseCounting::distinct;
  if (s == "occurrences") return PhraseCounting::occurrences;
  throw std::invalid_argument("unknown phrase counting: " + std::string(s));
}

std::string describe(std::string_view what, double value, std::string_view op, double limit) {
  std::ostringstream os;
  os << what << ' ' << text::format_double(value) << ' ' << op << ' ' << text::format_double(limit);
  return os.str();
}

bool has_letter(std::string_view word) {
  std::size_t pos = 0;
  while (pos < word.size()) {
    const char32_t cp = text::next_codepoint(word, pos);
    if (text::is_ascii_letter(cp) || text::is_arabic_letter(cp)) return true;
  }
  return false;
}

std::string_view strip_punct(std::string_view w) {
  auto is_p = [](std::string_view s, std::size_t at, std::size_t& len) {
    std::size_t pos = at;
    const char32_t cp = text::next_codepoint(s, pos);
    len = pos - at;
    return text::is_punctuation(cp);
  };
  std::size_t len = 0;
  while (!w.empty() && is_p(w, 0, len)) w.remove_prefix(len);
  while (!w.empty()) {
    std::size_t start = w.size() - 1;
    while (start > 0 && (static_cast<unsigned char>(w[start]) & 0xC0) == 0x80) --start;
    if (!is_p(w, start, len) || start + len != w.size()) break;
    w.remove_suffix(len);
  }
  return w;
}

}  // namespace

std::string_view to_string(Rule r) { return kRuleNames[rule_index(r)]; }

Rule parse_rule(std::string_view name) {
  for (std::size_t i = 0; i < kRuleNames.size(); ++i) {
    if (kRuleNames[i] == name) return static_cast<Rule>(i);
  }
  throw std::invalid_argument("unknown rule: " + std::string(name));
}

std::vector<std::string> GopherConfig::default_arabic_stop_words() {
  return {"في",   "من",   "على",  "إلى",  "عن",   "مع",   "هذا",  "هذه",  "ذلك",  "تلك",
          "التي", "الذي", "الذين", "أن",  "إن",   "كان",  "كانت", "قد",   "لا",   "ما",
          "لم",   "لن",   "هو",   "هي",   "هم",   "نحن",  "أنا",  "كل",   "بعد",  "قبل",
          "بين",  "حتى",  "عند",  "أو",   "ثم",   "بل",   "لكن",  "إذا",  "كما",  "أي",
          "غير",  "بعض",  "أيضا", "منذ",  "حيث",  "هناك", "هنا",  "وقد",  "وهو",  "وهي",
          "ولا",  "ولم",  "ليس",  "عليه", "فيه",  "به",   "له",   "لها",  "فقد",  "أنه"};
}

FilterConfig FilterConfig::defaults() {
  FilterConfig cfg;
  cfg.gopher.stop_words = GopherConfig::default_arabic_stop_words();
  cfg.permissible_punctuation =
      "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~"
      "«»،؛؟٪٫٬٭۔…–—‘’“”•";
  return cfg;
}

void FilterConfig::validate() const {
  auto frac = [](double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0,1]");
  };
  frac(short_line_frac_max, "short_line_frac_max");
  frac(permissible_char_min_frac, "permissible_char_min_frac");
  frac(gopher.min_alpha_word_frac, "gopher.min_alpha_word_frac");
  frac(gopher.max_punct_char_frac, "gopher.max_punct_char_frac");
  if (!(gopher.max_symbol_to_word_ratio >= 0.0)) {
    throw std::invalid_argument("gopher.max_symbol_to_word_ratio must be >= 0");
  }
  auto no_empty = [](const std::vector<std::string>& v, const char* name) {
    for (const auto& p : v) {
      if (text::trim(p).empty()) throw std::invalid_argument(std::string(name) + " contains an empty phrase");
    }
  };
  no_empty(unsafe_phrases, "unsafe_phrases");
  no_empty(ad_phrases, "ad_phrases");
  no_empty(gopher.stop_words, "gopher.stop_words");
  if (gopher.min_words > gopher.max_words) throw std::invalid_argument("gopher.min_words > gopher.max_words");
  if (!(gopher.min_mean_word_len <= gopher.max_mean_word_len)) {
    throw std::invalid_argument("gopher.min_mean_word_len > gopher.max_mean_word_len");
  }
}

namespace {

template <class T>
void read_if(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

std::vector<std::string> read_phrase_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open phrase list: " + path);
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto t = text::trim(line);
    if (!t.empty() && t.front() != '#') out.emplace_back(t);
  }
  return out;
}

}  // namespace

FilterConfig filter_config_from_json(const json& j) {
  static const std::set<std::string> known = {
      "unsafe_phrases", "unsafe_phrases_file", "unsafe_min_hits", "unsafe_counting",
      "require_url",    "safety_sources",      "ad_phrases",      "ad_phrases_file",
      "ad_max_hits",    "ad_counting",         "min_lines",       "short_line_word_max",
      "short_line_frac_max", "permissible_char_min_frac", "permissible_punctuation", "gopher",
      // Consumed by the pipeline, not the rules.
      "char_map", "header_patterns"};
  static const std::set<std::string> known_gopher = {
      "min_words",          "max_words",      "min_mean_word_len", "max_mean_word_len",
      "max_symbol_to_word_ratio", "min_alpha_word_frac", "stop_words", "stop_words_file",
      "min_stop_words",     "max_punct_char_frac"};
  if (!j.is_object()) throw std::invalid_argument("filter config must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw std::invalid_argument("unknown config key: " + k);
  }
  FilterConfig cfg = FilterConfig::defaults();
  try {
    read_if(j, "unsafe_phrases", cfg.unsafe_phrases);
    if (auto it = j.find("unsafe_phrases_file"); it != j.end()) {
      auto extra = read_phrase_file(it->get<std::string>());
      cfg.unsafe_phrases.insert(cfg.unsafe_phrases.end(), extra.begin(), extra.end());
    }
    read_if(j, "unsafe_min_hits", cfg.unsafe_min_hits);
    if (auto it = j.find("unsafe_counting"); it != j.end()) cfg.unsafe_counting = parse_counting(it->get<std::string>());
    read_if(j, "require_url", cfg.require_url);
    if (auto it = j.find("safety_sources"); it != j.end()) {
      cfg.safety_sources.clear();
      for (const auto& s : *it) cfg.safety_sources.insert(corpus::parse_source(s.get<std::string>()));
    }
    read_if(j, "ad_phrases", cfg.ad_phrases);
    if (auto it = j.find("ad_phrases_file"); it != j.end()) {
      auto extra = read_phrase_file(it->get<std::string>());
      cfg.ad_phrases.insert(cfg.ad_phrases.end(), extra.begin(), extra.end());
    }
    read_if(j, "ad_max_hits", cfg.ad_max_hits);
    if (auto it = j.find("ad_counting"); it != j.end()) cfg.ad_counting = parse_counting(it->get<std::string>());
    read_if(j, "min_lines", cfg.min_lines);
    read_if(j, "short_line_word_max", cfg.short_line_word_max);
    read_if(j, "short_line_frac_max", cfg.short_line_frac_max);
    read_if(j, "permissible_char_min_frac", cfg.permissible_char_min_frac);
    read_if(j, "permissible_punctuation", cfg.permissible_punctuation);
    if (auto it = j.find("gopher"); it != j.end()) {
      const json& g = *it;
      for (const auto& [k, v] : g.items()) {
        if (!known_gopher.count(k)) throw std::invalid_argument("unknown gopher config key: " + k);
      }
      read_if(g, "min_words", cfg.gopher.min_words);
      read_if(g, "max_words", cfg.gopher.max_words);
      read_if(g, "min_mean_word_len", cfg.gopher.min_mean_word_len);
      read_if(g, "max_mean_word_len", cfg.gopher.max_mean_word_len);
      read_if(g, "max_symbol_to_word_ratio", cfg.gopher.max_symbol_to_word_ratio);
      read_if(g, "min_alpha_word_frac", cfg.gopher.min_alpha_word_frac);
      read_if(g, "stop_words", cfg.gopher.stop_words);
      if (auto sw = g.find("stop_words_file"); sw != g.end()) {
        cfg.gopher.stop_words = read_phrase_file(sw->get<std::string>());
      }
      read_if(g, "min_stop_words", cfg.gopher.min_stop_words);
      read_if(g, "max_punct_char_frac", cfg.gopher.max_punct_char_frac);
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("bad filter config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json to_json(const FilterConfig& cfg) {
  json j;
  j["unsafe_phrases"] = cfg.unsafe_phrases;
  j["unsafe_min_hits"] = cfg.unsafe_min_hits;
  j["unsafe_counting"] = counting_name(cfg.unsafe_counting);
  j["require_url"] = cfg.require_url;
  json sources = json::array();
  for (auto s : cfg.safety_sources) sources.push_back(corpus::to_string(s));
  j["safety_sources"] = sources;
  j["ad_phrases"] = cfg.ad_phrases;
  j["ad_max_hits"] = cfg.ad_max_hits;
  j["ad_counting"] = counting_name(cfg.ad_counting);
  j["min_lines"] = cfg.min_lines;
  j["short_line_word_max"] = cfg.short_line_word_max;
  j["short_line_frac_max"] = cfg.short_line_frac_max;
  j["permissible_char_min_frac"] = cfg.permissible_char_min_frac;
  j["permissible_punctuation"] = cfg.permissible_punctuation;
  j["gopher"] = {
      {"min_words", cfg.gopher.min_words},
      {"max_words", cfg.gopher.max_words},
      {"min_mean_word_len", cfg.gopher.min_mean_word_len},
      {"max_mean_word_len", cfg.gopher.max_mean_word_len},
      {"max_symbol_to_word_ratio", cfg.gopher.max_symbol_to_word_ratio},
      {"min_alpha_word_frac", cfg.gopher.min_alpha_word_frac},
      {"stop_words", cfg.gopher.stop_words},
      {"min_stop_words", cfg.gopher.min_stop_words},
      {"max_punct_char_frac", cfg.gopher.max_punct_char_frac},
  };
  return j;
}

// ---------------------------------------------------------------------------

CompiledFilters::CompiledFilters(FilterConfig cfg, const corpus::CharMap& map) : cfg_(std::move(cfg)) {
  cfg_.validate();
  auto compile = [&](const std::vector<std::string>& src) {
    std::set<std::string> uniq;
    for (const auto& p : src) uniq.insert(text::ascii_lower(corpus::normalize_chars(text::trim(p), map)));
    return std::vector<std::string>(uniq.begin(), uniq.end());
  };
  unsafe_ = compile(cfg_.unsafe_phrases);
  ads_ = compile(cfg_.ad_phrases);
  for (const auto& w : cfg_.gopher.stop_words) stop_words_.insert(corpus::normalize_chars(w, map));
  permissible_punct_ = text::decode(cfg_.permissible_punctuation);
  std::sort(permissible_punct_.begin(), permissible_punct_.end());
}

std::size_t CompiledFilters::count_unsafe(std::string_view t) const {
  return count_hits(text::ascii_lower(t), unsafe_, cfg_.unsafe_counting);
}

std::size_t CompiledFilters::count_ads(std::string_view t) const {
  return count_hits(text::ascii_lower(t), ads_, cfg_.ad_counting);
}

FilterDecision CompiledFilters::safety(const Document& doc) const {
  if (!cfg_.safety_sources.count(doc.source)) return FilterDecision::kept();
  if (cfg_.require_url && !corpus::has_url(doc)) return FilterDecision::removed(Rule::safety, "missing url");
  if (unsafe_.empty()) return FilterDecision::kept();
  const std::size_t hits = count_unsafe(doc.text);
  if (hits >= cfg_.unsafe_min_hits) {
    return FilterDecision::removed(Rule::safety, describe("unsafe phrases", static_cast<double>(hits), ">=",
                                                          static_cast<double>(cfg_.unsafe_min_hits)));
  }
  return FilterDecision::kept();
}

FilterDecision CompiledFilters::ads(const Document& doc) const {
  if (ads_.empty()) return FilterDecision::kept();
  const std::size_t hits = count_ads(doc.text);
  if (hits > cfg_.ad_max_hits) {
    return FilterDecision::removed(Rule::ads, describe("ad phrases", static_cast<double>(hits), ">",
                                                       static_cast<double>(cfg_.ad_max_hits)));
  }
  return FilterDecision::kept();
}

FilterDecision CompiledFilters::lines(const Document& doc) const {
  std::size_t n = 0;
  std::size_t short_lines = 0;
  for (auto line : text::split_lines(doc.text)) {
    line = text::trim(line);
    if (line.empty()) continue;
    ++n;
    if (text::count_words(line) < cfg_.short_line_word_max) ++short_lines;
  }
  if (n < cfg_.min_lines) {
    return FilterDecision::removed(Rule::lines, describe("lines", static_cast<double>(n), "<",
                                                         static_cast<double>(cfg_.min_lines)));
  }
  const double frac = static_cast<double>(short_lines) / static_cast<double>(n);
  if (frac > cfg_.short_line_frac_max) {
    return FilterDecision::removed(Rule::lines, describe("short line fraction", frac, ">", cfg_.short_line_frac_max));
  }
  return FilterDecision::kept();
}

FilterDecision CompiledFilters::chars(const Document& doc) const {
  std::size_t total = 0;
  std::size_t ok = 0;
  std::size_t pos = 0;
  const std::string_view t = doc.text;
  while (pos < t.size()) {
    const char32_t cp = text::next_codepoint(t, pos);
    ++total;
    if (text::is_space(cp) || text::is_ascii_alnum(cp) || text::is_arabic_letter(cp) ||
        text::is_arabic_mark(cp) || text::is_arabic_digit(cp) ||
        std::binary_search(permissible_punct_.begin(), permissible_punct_.end(), cp)) {
      ++ok;
    }
  }
  if (total == 0) return FilterDecision::kept();
  // Exact division, so an exact 95% compares equal to the 0.95 threshold.
  const double frac = static_cast<double>(ok) / static_cast<double>(total);
  if (frac < cfg_.permissible_char_min_frac) {
    return FilterDecision::removed(Rule::chars, describe("permissible fraction", frac, "<", cfg_.permissible_char_min_frac));
  }
  return FilterDecision::kept();
}

FilterDecision CompiledFilters::gopher(const Document& doc) const {
  const GopherConfig& g = cfg_.gopher;
  const auto words = text::split_words(doc.text);
  const std::size_t n = words.size();
  if (n < g.min_words || n > g.max_words) {
    return FilterDecision::removed(
        Rule::gopher, describe("word count", static_cast<double>(n), n < g.min_words ? "<" : ">",
                               static_cast<double>(n < g.min_words ? g.min_words : g.max_words)));
  }
  std::size_t chars = 0;
  std::size_t alpha_words = 0;
  std::size_t stops = 0;
  for (auto w : words) {
    chars += text::codepoint_count(w);
    if (has_letter(w)) ++alpha_words;
    if (stop_words_.count(std::string(strip_punct(w)))) ++stops;
  }
  const double dn = static_cast<double>(n);
  const double mean_len = static_cast<double>(chars) / dn;
  if (mean_len < g.min_mean_word_len || mean_len > g.max_mean_word_len) {
    return FilterDecision::removed(
        Rule::gopher, describe("mean word length", mean_len, mean_len < g.min_mean_word_len ? "<" : ">",
                               mean_len < g.min_mean_word_len ? g.min_mean_word_len : g.max_mean_word_len));
  }
  const std::string_view t = doc.text;
  const std::size_t symbols = count_occurrences(t, "#") + count_occurrences(t, "...") + count_occurrences(t, "…");
  const double symbol_ratio = static_cast<double>(symbols) / dn;
  if (symbol_ratio > g.max_symbol_to_word_ratio) {
    return FilterDecision::removed(Rule::gopher, describe("symbol/word ratio", symbol_ratio, ">", g.max_symbol_to_word_ratio));
  }
  const double alpha_frac = static_cast<double>(alpha_words) / dn;
  if (alpha_frac < g.min_alpha_word_frac) {
    return FilterDecision::removed(Rule::gopher, describe("alphabetic word fraction", alpha_frac, "<", g.min_alpha_word_frac));
  }
  if (stops < g.min_stop_words) {
    return FilterDecision::removed(Rule::gopher, describe("stop words", static_cast<double>(stops), "<",
                                                          static_cast<double>(g.min_stop_words)));
  }
  std::size_t punct = 0;
  std::size_t visible = 0;
  std::size_t pos = 0;
  while (pos < t.size()) {
    const char32_t cp = text::next_codepoint(t, pos);
    if (text::is_space(cp)) continue;
    ++visible;
    if (text::is_punctuation(cp)) ++punct;
  }
  const double punct_frac = visible == 0 ? 0.0 : static_cast<double>(punct) / static_cast<double>(visible);
  if (punct_frac > g.max_punct_char_frac) {
    return FilterDecision::removed(Rule::gopher, describe("punctuation fraction", punct_frac, ">", g.max_punct_char_frac));
  }
  return FilterDecision::kept();
}

FilterDecision CompiledFilters::apply(const Document& doc, Rule rule) const {
  switch (rule) {
    case Rule::safety:
      return safety(doc);
    case Rule::ads:
      return ads(doc);
    case Rule::lines:
      return lines(doc);
    case Rule::chars:
      return chars(doc);
    case Rule::gopher:
      return gopher(doc);
    case Rule::none:
      break;
  }
  return FilterDecision::kept();
}

FilterDecision CompiledFilters::apply_all(const Document& doc) const {
  for (Rule r : kRuleOrder) {
    FilterDecision d = apply(doc, r);
    if (!d.keep) return d;
  }
  return FilterDecision::kept();
}

FilterDecision apply_filter(const Document& doc, Rule rule, const CompiledFilters& filters) {
  return filters.apply(doc, rule);
}

// ---------------------------------------------------------------------------

SourceCounts CleaningReport::total() const {
  SourceCounts t;
  for (const auto& [src, c] : sources) {
    t.docs_in += c.docs_in;
    t.tokens_in += c.tokens_in;
    t.docs_out += c.docs_out;
    t.tokens_out += c.tokens_out;
    t.tokens_edit_delta += c.tokens_edit_delta;
    for (std::size_t i = 0; i < kRuleOrder.size(); ++i) {
      t.docs_removed[i] += c.docs_removed[i];
      t.tokens_removed[i] += c.tokens_removed[i];
    }
  }
  return t;
}

std::uint64_t CleaningReport::docs_removed(Rule rule) const {
  return total().docs_removed[rule_index(rule)];
}

CleaningReport merge_reports(const CleaningReport& a, const CleaningReport& b) {
  if (a.rules != b.rules) throw ReportSchemaError("cannot merge reports with different rule sets");
  if (a.tokenizer != b.tokenizer) {
    throw ReportSchemaError("cannot merge reports counted with different tokenizers (" + a.tokenizer +
                            " vs " + b.tokenizer + ")");
  }
  CleaningReport out = a;
  for (const auto& [src, c] : b.sources) {
    SourceCounts& d = out.sources[src];
    d.docs_in += c.docs_in;
    d.tokens_in += c.tokens_in;
    d.docs_out += c.docs_out;
    d.tokens_out += c.tokens_out;
    d.tokens_edit_delta += c.tokens_edit_delta;
    for (std::size_t i = 0; i < kRuleOrder.size(); ++i) {
      d.docs_removed[i] += c.docs_removed[i];
      d.tokens_removed[i] += c.tokens_removed[i];
    }
  }
  return out;
}

namespace {

double pct(std::uint64_t part, std::uint64_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) / static_cast<double>(whole);
}

json counts_json(const SourceCounts& c) {
  json removed = json::object();
  for (std::size_t i = 0; i < kRuleOrder.size(); ++i) {
    removed[std::string(to_string(kRuleOrder[i]))] = {{"docs", c.docs_removed[i]}, {"tokens", c.tokens_removed[i]}};
  }
  return {
      {"docs_in", c.docs_in},
      {"tokens_in", c.tokens_in},
      {"docs_out", c.docs_out},
      {"tokens_out", c.tokens_out},
      {"tokens_edit_delta", c.tokens_edit_delta},
      {"docs_kept_pct", pct(c.docs_out, c.docs_in)},
      {"tokens_kept_pct", pct(c.tokens_out, c.tokens_in)},
      {"removed", removed},
  };
}

SourceCounts counts_from_json(const json& j) {
  SourceCounts c;
  c.docs_in = j.at("docs_in").get<std::uint64_t>();
  c.tokens_in = j.at("tokens_in").get<std::uint64_t>();
  c.docs_out = j.at("docs_out").get<std::uint64_t>();
  c.tokens_out = j.at("tokens_out").get<std::uint64_t>();
  c.tokens_edit_delta = j.at("tokens_edit_delta").get<std::int64_t>();
  const json& removed = j.at("removed");
  for (std::size_t i = 0; i < kRuleOrder.size(); ++i) {
    const json& r = removed.at(std::string(to_string(kRuleOrder[i])));
    c.docs_removed[i] = r.at("docs").get<std::uint64_t>();
    c.tokens_removed[i] = r.at("tokens").get<std::uint64_t>();
  }
  return c;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

json to_json(const CleaningReport& r) {
  json sources = json::object();
  for (const auto& [src, c] : r.sources) sources[std::string(corpus::to_string(src))] = counts_json(c);
  return {{"tokenizer", r.tokenizer}, {"rules", r.rules}, {"sources", sources}, {"total", counts_json(r.total())}};
}

CleaningReport report_from_json(const json& j) {
  try {
    CleaningReport r;
    r.tokenizer = j.at("tokenizer").get<std::string>();
    r.rules = j.at("rules").get<std::vector<std::string>>();
    std::vector<std::string> expected;
    for (Rule rule : kRuleOrder) expected.emplace_back(to_string(rule));
    if (r.rules != expected) throw ReportSchemaError("unsupported rule set in report");
    for (const auto& [name, c] : j.at("sources").items()) r.sources[corpus::parse_source(name)] = counts_from_json(c);
    return r;
  } catch (const json::exception& e) {
    throw ReportSchemaError(std::string("malformed cleaning report: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ReportSchemaError(std::string("malformed cleaning report: ") + e.what());
  }
}

std::string to_table_csv(const CleaningReport& r) {
  std::ostringstream os;
  os << "dataset,tokens_before,docs_before,tokens_after,tokens_kept_pct,docs_after,docs_kept_pct\n";
  auto row = [&](std::string_view name, const SourceCounts& c) {
    os << name << ',' << c.tokens_in << ',' << c.docs_in << ',' << c.tokens_out << ','
       << fixed2(pct(c.tokens_out, c.tokens_in)) << ',' << c.docs_out << ',' << fixed2(pct(c.docs_out, c.docs_in))
       << '\n';
  };
  for (const auto& [src, c] : r.sources) row(corpus::to_string(src), c);
  row("total", r.total());
  return os.str();
}

// ---------------------------------------------------------------------------

namespace {

char32_t parse_codepoint_key(const std::string& key) {
  if (key.size() > 2 && (key[0] == 'U' || key[0] == 'u') && key[1] == '+') {
    std::size_t used = 0;
    const unsigned long v = std::stoul(key.substr(2), &used, 16);
    if (used != key.size() - 2 || v > 0x10FFFF) throw std::invalid_argument("bad codepoint key: " + key);
    return static_cast<char32_t>(v);
  }
  const std::u32string cps = text::decode(key);
  if (cps.size() != 1) throw std::invalid_argument("char map key must be one codepoint or U+XXXX: " + key);
  return cps[0];
}

}  // namespace

Pipeline pipeline_from_json(const json& j) {
  FilterConfig cfg = filter_config_from_json(j);
  corpus::CharMap map;
  if (auto it = j.find("char_map"); it != j.end()) {
    corpus::CharMapMode mode = corpus::CharMapMode::nfkc_plus_table;
    if (auto m = it->find("mode"); m != it->end()) {
      const auto name = m->get<std::string>();
      if (name == "table_only") {
        mode = corpus::CharMapMode::table_only;
      } else if (name != "nfkc_plus_table") {
        throw std::invalid_argument("unknown char_map mode: " + name);
      }
    }
    std::map<char32_t, std::string> overrides;
    if (auto o = it->find("overrides"); o != it->end()) {
      for (const auto& [k, v] : o->items()) overrides[parse_codepoint_key(k)] = v.get<std::string>();
    }
    map = corpus::CharMap(mode, std::move(overrides));
  }
  corpus::HeaderPatterns headers = corpus::HeaderPatterns::defaults();
  if (auto it = j.find("header_patterns"); it != j.end()) {
    if (auto d = it->find("date_lines"); d != it->end()) headers.date_lines = d->get<std::vector<std::string>>();
    if (auto t = it->find("title_max_words"); t != it->end()) headers.title_max_words = t->get<std::size_t>();
  }
  return Pipeline(std::move(cfg), std::move(map), std::move(headers));
}

DocumentOutcome process_document(const Document& doc, const Pipeline& pipe,
                                 const tokenization::TokenizerAdapter& tok) {
  DocumentOutcome out;
  out.raw_tokens = tok.count_tokens(doc.text);
  out.cleaned = doc;
  out.cleaned.text = corpus::normalize_chars(doc.text, pipe.char_map);
  out.cleaned = pipe.stripper.strip(std::move(out.cleaned));
  out.decision = pipe.filters.apply_all(out.cleaned);
  if (out.decision.keep) out.clean_tokens = tok.count_tokens(out.cleaned.text);
  return out;
}

namespace {

void account(CleaningReport& report, DocumentOutcome& o, std::vector<Document>& kept) {
  SourceCounts& c = report.sources[o.cleaned.source];
  ++c.docs_in;
  c.tokens_in += o.raw_tokens;
  if (o.decision.keep) {
    ++c.docs_out;
    c.tokens_out += o.clean_tokens;
    c.tokens_edit_delta += static_cast<std::int64_t>(o.raw_tokens) - static_cast<std::int64_t>(o.clean_tokens);
    kept.push_back(std::move(o.cleaned));
  } else {
    const std::size_t i = rule_index(o.decision.rule);
    ++c.docs_removed[i];
    c.tokens_removed[i] += o.raw_tokens;
  }
}

}  // namespace

PipelineResult run_pipeline_reference(std::span<const Document> docs, const Pipeline& pipe,
                                      const tokenization::TokenizerAdapter& tok) {
  PipelineResult result;
  result.report = CleaningReport::empty(tok.name());
  result.decisions.reserve(docs.size());
  for (const auto& doc : docs) {
    DocumentOutcome o = process_document(doc, pipe, tok);
    result.decisions.push_back(o.decision);
    account(result.report, o, result.kept);
  }
  return result;
}

PipelineResult run_pipeline(std::span<const Document> docs, const Pipeline& pipe,
                            const tokenization::TokenizerAdapter& tok) {
  if (!tok.concurrent_safe()) return run_pipeline_reference(docs, pipe, tok);
  std::vector<DocumentOutcome> outcomes(docs.size());
  const auto n = static_cast<std::int64_t>(docs.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < n; ++i) outcomes[i] = process_document(docs[i], pipe, tok);

  // Accounting stays sequential and in input order, so the report and the
  // kept sequence match the reference path exactly.
  PipelineResult result;
  result.report = CleaningReport::empty(tok.name());
  result.decisions.reserve(docs.size());
  for (auto& o : outcomes) {
    result.decisions.push_back(o.decision);
    account(result.report, o, result.kept);
  }
  return result;
}

}  // namespace lmdata::filters
