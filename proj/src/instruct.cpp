#include "lmdata/instruct.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "lmdata/text.hpp"

namespace lmdata::instruct {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 2> kRoleNames = {"human", "gpt"};
constexpr std::array<std::string_view, 4> kOriginNames = {"rephrase_standard", "rephrase_mcq", "instar", "aya"};
constexpr std::array<std::string_view, 4> kStyleNames = {"latin_letters", "arabic_letters", "western_digits",
                                                         "arabic_indic_digits"};
constexpr std::array<std::string_view, 14> kReasonNames = {
    "empty",           "unparseable",      "role_order",        "empty_turn",     "too_short",
    "reserved_sequence", "no_question",    "no_answer",         "too_few_options", "too_many_options",
    "duplicate_options", "answer_missing", "mixed_styles",      "option_sequence"};

constexpr std::array<std::string_view, kMaxOptions> kLatinMarkers = {"A", "B", "C", "D", "E"};
constexpr std::array<std::string_view, kMaxOptions> kArabicLetterMarkers = {"أ", "ب", "ج", "د", "هـ"};
constexpr std::array<std::string_view, kMaxOptions> kDigitMarkers = {"1", "2", "3", "4", "5"};
constexpr std::array<std::string_view, kMaxOptions> kArabicDigitMarkers = {"١", "٢", "٣", "٤", "٥"};

constexpr std::string_view kAnswerLabel = "الإجابة";

Rejection reject(RejectReason r, std::string detail = {}) { return Rejection{r, std::move(detail)}; }

template <std::size_t N>
std::size_t index_of(const std::array<std::string_view, N>& names, std::string_view name, const char* what) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == name) return i;
  }
  throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(name));
}

bool contains_control_marker(std::string_view s) {
  return s.find(kImStart) != std::string_view::npos || s.find(kImEnd) != std::string_view::npos;
}

std::string join_lines(const std::vector<std::string_view>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out += '\n';
    out.append(lines[i]);
  }
  return out;
}

}  // namespace

std::string_view to_string(Role r) { return kRoleNames[static_cast<std::size_t>(r)]; }
std::string_view to_string(Origin o) { return kOriginNames[static_cast<std::size_t>(o)]; }
std::string_view to_string(EnumStyle s) { return kStyleNames[static_cast<std::size_t>(s)]; }
std::string_view to_string(RejectReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

Origin parse_origin(std::string_view name) {
  return static_cast<Origin>(index_of(kOriginNames, name, "origin"));
}

EnumStyle parse_enum_style(std::string_view name) {
  return static_cast<EnumStyle>(index_of(kStyleNames, name, "enumeration style"));
}

std::size_t Dialogue::human_turns() const {
  return static_cast<std::size_t>(
      std::count_if(turns.begin(), turns.end(), [](const Turn& t) { return t.from == Role::human; }));
}

std::optional<Rejection> validate(const Dialogue& d) {
  if (d.turns.empty()) return reject(RejectReason::empty);
  if (d.turns.size() < 2) return reject(RejectReason::too_short, "need at least one question and answer");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    const Turn& t = d.turns[i];
    if (text::trim(t.value).empty()) return reject(RejectReason::empty_turn, "turn " + std::to_string(i));
    const Role expected = i % 2 == 0 ? Role::human : Role::gpt;
    if (t.from != expected) return reject(RejectReason::role_order, "turn " + std::to_string(i));
    if (contains_control_marker(t.value)) return reject(RejectReason::reserved_sequence, "turn " + std::to_string(i));
  }
  if (d.turns.back().from != Role::gpt) return reject(RejectReason::role_order, "last turn is not an answer");
  return std::nullopt;
}

// ---------------------------------------------------------------------------

const std::array<std::string_view, kMaxOptions>& enum_markers(EnumStyle style) {
  switch (style) {
    case EnumStyle::latin_letters:
      return kLatinMarkers;
    case EnumStyle::arabic_letters:
      return kArabicLetterMarkers;
    case EnumStyle::western_digits:
      return kDigitMarkers;
    case EnumStyle::arabic_indic_digits:
      return kArabicDigitMarkers;
  }
  return kLatinMarkers;
}

std::string render_mcq(const MCQItem& item, bool with_answer) {
  if (item.options.size() > kMaxOptions) throw std::invalid_argument("too many options");
  const auto& markers = enum_markers(item.style);
  std::string out = item.question;
  for (std::size_t i = 0; i < item.options.size(); ++i) {
    out += '\n';
    out.append(markers[i]);
    out += ". ";
    out += item.options[i];
  }
  if (with_answer) {
    if (item.answer_index >= item.options.size()) throw std::invalid_argument("answer index out of range");
    out += '\n';
    out.append(kAnswerLabel);
    out += ": ";
    out.append(markers[item.answer_index]);
  }
  return out;
}

MCQItem restyle(MCQItem item, EnumStyle style) {
  item.style = style;
  return item;
}

namespace {

struct MarkerMatch {
  EnumStyle style;
  std::size_t index;
  std::size_t length;  // bytes consumed by the marker
};

// Marker at the start of `s`, followed by end of string or a non-letter.
std::optional<MarkerMatch> match_marker(std::string_view s) {
  for (EnumStyle style : kEnumStyles) {
    const auto& markers = enum_markers(style);
    for (std::size_t i = 0; i < markers.size(); ++i) {
      std::string_view m = markers[i];
      std::size_t len = 0;
      if (s.starts_with(m)) {
        len = m.size();
      } else if (style == EnumStyle::arabic_letters && i == 4 && s.starts_with("ه")) {
        len = std::string_view("ه").size();  // heh without tatweel
      } else {
        continue;
      }
      if (len < s.size()) {
        std::size_t pos = len;
        const char32_t next = text::next_codepoint(s, pos);
        if (text::is_ascii_alnum(next) || text::is_arabic_letter(next) || text::is_arabic_digit(next)) continue;
      }
      return MarkerMatch{style, i, len};
    }
  }
  return std::nullopt;
}

struct OptionLine {
  MarkerMatch marker;
  std::string_view text;
};

std::optional<OptionLine> match_option(std::string_view line) {
  auto m = match_marker(line);
  if (!m) return std::nullopt;
  std::string_view rest = line.substr(m->length);
  if (rest.empty() || (rest.front() != '.' && rest.front() != ')')) return std::nullopt;
  rest.remove_prefix(1);
  if (rest.empty() || !(rest.front() == ' ' || rest.front() == '\t')) return std::nullopt;
  rest = text::trim(rest);
  if (rest.empty()) return std::nullopt;
  return OptionLine{*m, rest};
}

// "الإجابة: B" / "Answer: B" -> the text after the colon.
std::optional<std::string_view> match_answer_line(std::string_view line) {
  static const std::array<std::string_view, 5> labels = {"الإجابة الصحيحة", "الإجابة", "الجواب", "Answer",
                                                         "answer"};
  for (auto label : labels) {
    if (!line.starts_with(label)) continue;
    std::string_view rest = text::trim(line.substr(label.size()));
    if (rest.empty() || rest.front() != ':') continue;
    return text::trim(rest.substr(1));
  }
  return std::nullopt;
}

}  // namespace

std::optional<EnumStyle> detect_enum_style(std::string_view t) {
  for (auto line : text::split_lines(t)) {
    if (auto opt = match_option(text::trim(line))) return opt->marker.style;
  }
  return std::nullopt;
}

Parsed<MCQItem> parse_mcq(std::string_view raw) {
  const std::string_view t = text::trim(raw);
  if (t.empty()) return reject(RejectReason::empty);
  std::vector<std::string_view> question;
  std::vector<OptionLine> options;
  std::optional<std::string_view> answer;
  for (auto line : text::split_lines(t)) {
    line = text::trim(line);
    if (line.empty()) continue;
    if (auto a = match_answer_line(line)) {
      if (answer) return reject(RejectReason::unparseable, "more than one answer line");
      answer = *a;
      continue;
    }
    if (answer) return reject(RejectReason::unparseable, "text after the answer line");
    if (auto opt = match_option(line)) {
      options.push_back(*opt);
      continue;
    }
    if (!options.empty()) return reject(RejectReason::unparseable, "text between options");
    question.push_back(line);
  }
  if (question.empty()) return reject(RejectReason::no_question);
  if (options.size() < 2) return reject(RejectReason::too_few_options, std::to_string(options.size()));
  if (options.size() > kMaxOptions) return reject(RejectReason::too_many_options, std::to_string(options.size()));
  const EnumStyle style = options.front().marker.style;
  for (const auto& o : options) {
    if (o.marker.style != style) return reject(RejectReason::mixed_styles);
  }
  for (std::size_t i = 0; i < options.size(); ++i) {
    if (options[i].marker.index != i) return reject(RejectReason::option_sequence, "option " + std::to_string(i));
  }
  MCQItem item;
  item.question = join_lines(question);
  item.style = style;
  std::set<std::string_view> seen;
  for (const auto& o : options) {
    if (!seen.insert(o.text).second) return reject(RejectReason::duplicate_options, std::string(o.text));
    item.options.emplace_back(o.text);
  }
  if (!answer) return reject(RejectReason::no_answer);
  auto m = match_marker(*answer);
  if (!m || m->style != style || m->index >= options.size()) {
    return reject(RejectReason::answer_missing, std::string(*answer));
  }
  item.answer_index = m->index;
  return item;
}

Parsed<std::vector<MCQItem>> parse_mcq_response(std::string_view raw) {
  std::vector<MCQItem> items;
  std::vector<std::string_view> block;
  auto flush = [&]() -> std::optional<Rejection> {
    if (block.empty()) return std::nullopt;
    auto parsed = parse_mcq(join_lines(block));
    block.clear();
    if (auto* r = std::get_if<Rejection>(&parsed)) return *r;
    items.push_back(std::get<MCQItem>(std::move(parsed)));
    return std::nullopt;
  };
  for (auto line : text::split_lines(raw)) {
    if (text::trim(line).empty()) {
      if (auto r = flush()) return *r;
    } else {
      block.push_back(line);
    }
  }
  if (auto r = flush()) return *r;
  if (items.empty()) return reject(RejectReason::empty);
  return items;
}

Dialogue mcq_dialogue(const std::vector<MCQItem>& items) {
  Dialogue d;
  d.origin = Origin::rephrase_mcq;
  for (const auto& item : items) {
    d.turns.push_back({Role::human, render_mcq(item, false)});
    std::string answer(enum_markers(item.style)[item.answer_index]);
    answer += ". ";
    answer += item.options[item.answer_index];
    d.turns.push_back({Role::gpt, std::move(answer)});
  }
  return d;
}

// ---------------------------------------------------------------------------

std::vector<std::string_view> split_sentences(std::string_view t) {
  auto is_terminator = [](char32_t cp) {
    return cp == '.' || cp == '!' || cp == '?' || cp == 0x061F || cp == 0x06D4 || cp == 0x2026;
  };
  std::vector<std::string_view> out;
  std::size_t start = 0;
  std::size_t pos = 0;
  while (pos < t.size()) {
    const char32_t cp = text::next_codepoint(t, pos);
    if (!is_terminator(cp)) continue;
    // Swallow a run of terminators ("?!", "...").
    std::size_t end = pos;
    while (end < t.size()) {
      std::size_t probe = end;
      if (!is_terminator(text::next_codepoint(t, probe))) break;
      end = probe;
    }
    bool boundary = end >= t.size();
    if (!boundary) {
      std::size_t probe = end;
      boundary = text::is_space(text::next_codepoint(t, probe));
    }
    pos = end;
    if (!boundary) continue;
    auto s = text::trim(t.substr(start, end - start));
    if (!s.empty()) out.push_back(s);
    start = end;
  }
  auto tail = text::trim(t.substr(std::min(start, t.size())));
  if (!tail.empty()) out.push_back(tail);
  return out;
}

namespace {

// Byte offset after `n` codepoints from `from`, clamped to the end.
std::size_t advance_codepoints(std::string_view s, std::size_t from, std::size_t n) {
  std::size_t pos = from;
  while (n > 0 && pos < s.size()) {
    text::next_codepoint(s, pos);
    --n;
  }
  return pos;
}

void hard_split(std::string_view sentence, std::size_t max_chars, std::vector<std::string>& out) {
  while (!sentence.empty()) {
    if (text::codepoint_count(sentence) <= max_chars) {
      out.emplace_back(sentence);
      return;
    }
    std::size_t cut = advance_codepoints(sentence, 0, max_chars);
    // Prefer the last whitespace inside the window.
    std::size_t ws = sentence.substr(0, cut).find_last_of(" \t\n");
    if (ws != std::string_view::npos && ws > 0) cut = ws;
    auto piece = text::trim(sentence.substr(0, cut));
    if (!piece.empty()) out.emplace_back(piece);
    sentence = text::trim(sentence.substr(cut));
  }
}

}  // namespace

std::vector<std::string> chunk_document(std::string_view raw, std::size_t max_chars) {
  if (max_chars == 0) throw std::invalid_argument("max_chars must be >= 1");
  const std::string_view t = text::trim(raw);
  if (t.empty()) return {};
  if (text::codepoint_count(t) <= max_chars) return {std::string(t)};

  const auto sentences = split_sentences(t);
  std::vector<std::string> out;
  const char* chunk_begin = nullptr;
  const char* chunk_end = nullptr;
  auto flush = [&] {
    if (chunk_begin) out.emplace_back(chunk_begin, chunk_end);
    chunk_begin = chunk_end = nullptr;
  };
  for (auto s : sentences) {
    const char* s_end = s.data() + s.size();
    if (chunk_begin) {
      std::string_view extended(chunk_begin, static_cast<std::size_t>(s_end - chunk_begin));
      if (text::codepoint_count(extended) <= max_chars) {
        chunk_end = s_end;
        continue;
      }
      flush();
    }
    if (text::codepoint_count(s) > max_chars) {
      hard_split(s, max_chars, out);
      continue;
    }
    chunk_begin = s.data();
    chunk_end = s_end;
  }
  flush();
  return out;
}

const PromptTemplates& PromptTemplates::defaults() {
  static const PromptTemplates t = [] {
    PromptTemplates p;
    p.version = "v1";
    p.standard =
        "اقرأ النص التالي واكتب حوارًا من أسئلة وأجوبة مبنيًا عليه فقط. "
        "ابدأ كل سؤال بكلمة \"سؤال:\" وكل جواب بكلمة \"جواب:\" في سطر جديد.\n"
        "\n---\n{chunk}\n---\n";
    p.mcq =
        "اقرأ النص التالي واكتب أسئلة اختيار من متعدد مبنية عليه فقط، بنفس تنسيق المثال. "
        "افصل بين الأسئلة بسطر فارغ.\n"
        "\nمثال:\n{exemplar}\n"
        "\n---\n{chunk}\n---\n";
    return p;
  }();
  return t;
}

EnumStyle pick_style(std::uint64_t seed, const std::array<double, 4>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::invalid_argument("style weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("style weights sum to zero");
  text::SplitMix64 rng(seed);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return kEnumStyles[i];
    u -= weights[i];
  }
  // Rounding at the top end.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return kEnumStyles[i];
  }
  return EnumStyle::latin_letters;
}

namespace {

// Single left-to-right pass, so substituted text is never re-expanded.
std::string substitute(std::string_view tmpl, std::string_view chunk, std::string_view exemplar) {
  static constexpr std::string_view kChunk = "{chunk}";
  static constexpr std::string_view kExemplar = "{exemplar}";
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    if (tmpl.substr(pos).starts_with(kChunk)) {
      out.append(chunk);
      pos += kChunk.size();
    } else if (tmpl.substr(pos).starts_with(kExemplar)) {
      out.append(exemplar);
      pos += kExemplar.size();
    } else {
      out.push_back(tmpl[pos++]);
    }
  }
  return out;
}

}  // namespace

std::string build_prompt(std::string_view chunk, Template tmpl, const MCQItem* exemplar,
                         std::optional<std::uint64_t> style_seed, const PromptTemplates& templates) {
  if (tmpl == Template::standard) return substitute(templates.standard, chunk, {});
  if (exemplar == nullptr) throw std::invalid_argument("the MCQ template needs a one-shot exemplar");
  MCQItem shown = *exemplar;
  if (style_seed) shown.style = pick_style(*style_seed, {1.0, 1.0, 1.0, 1.0});
  return substitute(templates.mcq, chunk, render_mcq(shown, true));
}

namespace {

struct Label {
  std::string_view text;
  Role role;
  bool ascii;
};

// Longer labels first so "السؤال" wins over "س".
constexpr std::array<Label, 14> kLabels = {{
    {"السؤال", Role::human, false},
    {"الإجابة", Role::gpt, false},
    {"الجواب", Role::gpt, false},
    {"إجابة", Role::gpt, false},
    {"سؤال", Role::human, false},
    {"جواب", Role::gpt, false},
    {"س", Role::human, false},
    {"ج", Role::gpt, false},
    {"question", Role::human, true},
    {"assistant", Role::gpt, true},
    {"answer", Role::gpt, true},
    {"user", Role::human, true},
    {"q", Role::human, true},
    {"a", Role::gpt, true},
}};

std::string_view skip_decoration(std::string_view s) {
  for (;;) {
    s = text::trim(s);
    if (s.starts_with("**")) {
      s.remove_prefix(2);
    } else if (s.starts_with("- ") || s.starts_with("* ") || s.starts_with("#")) {
      s.remove_prefix(1);
    } else {
      return s;
    }
  }
}

struct LabelMatch {
  Role role;
  std::string_view rest;
};

std::optional<LabelMatch> match_label(std::string_view line) {
  std::string_view s = skip_decoration(line);
  for (const auto& label : kLabels) {
    if (s.size() < label.text.size()) continue;
    std::string_view head = s.substr(0, label.text.size());
    if (label.ascii ? text::ascii_lower(head) != label.text : head != label.text) continue;
    std::string_view rest = s.substr(label.text.size());
    // Optional numbering and bold close: "سؤال 1:", "**Q2**:".
    std::size_t pos = 0;
    auto skip = [&](auto pred) {
      while (pos < rest.size()) {
        std::size_t probe = pos;
        if (!pred(text::next_codepoint(rest, probe))) break;
        pos = probe;
      }
    };
    skip([](char32_t c) { return c == ' ' || c == '\t'; });
    skip([](char32_t c) { return text::digit_value(c) >= 0; });
    skip([](char32_t c) { return c == ' ' || c == '\t' || c == '*'; });
    if (pos >= rest.size() || rest[pos] != ':') continue;
    rest.remove_prefix(pos + 1);
    while (rest.starts_with("**")) rest.remove_prefix(2);
    return LabelMatch{label.role, text::trim(rest)};
  }
  return std::nullopt;
}

}  // namespace

Parsed<Dialogue> parse_dialogue_response(std::string_view raw) {
  if (text::trim(raw).empty()) return reject(RejectReason::empty);
  Dialogue d;
  d.origin = Origin::rephrase_standard;
  std::vector<std::vector<std::string_view>> bodies;
  for (auto line : text::split_lines(raw)) {
    if (auto m = match_label(line)) {
      if (d.turns.empty() && m->role != Role::human) {
        return reject(RejectReason::role_order, "answer before any question");
      }
      if (!d.turns.empty() && d.turns.back().from == m->role) {
        return reject(RejectReason::role_order, "two consecutive turns from " + std::string(to_string(m->role)));
      }
      d.turns.push_back({m->role, {}});
      bodies.emplace_back();
      if (!m->rest.empty()) bodies.back().push_back(m->rest);
    } else if (!d.turns.empty()) {
      bodies.back().push_back(line);
    }
  }
  if (d.turns.empty()) return reject(RejectReason::unparseable, "no question/answer labels");
  for (std::size_t i = 0; i < d.turns.size(); ++i) {
    d.turns[i].value = std::string(text::trim(join_lines(bodies[i])));
  }
  if (auto r = validate(d)) return *r;
  return d;
}

std::size_t FilterReport::rejected_total() const {
  std::size_t n = 0;
  for (const auto& [reason, count] : rejected) n += count;
  return n;
}

namespace {

// Returns the dialogue when it passes every check, otherwise tallies the
// rejection.
std::optional<Dialogue> screen(Parsed<Dialogue>& candidate, FilterReport& report) {
  ++report.input;
  if (auto* r = std::get_if<Rejection>(&candidate)) {
    ++report.rejected[r->reason];
    return std::nullopt;
  }
  Dialogue& d = std::get<Dialogue>(candidate);
  if (auto r = validate(d)) {
    ++report.rejected[r->reason];
    return std::nullopt;
  }
  ++report.kept;
  return std::move(d);
}

}  // namespace

FilterResult filter_dialogues(std::vector<Parsed<Dialogue>> candidates) {
  FilterResult result;
  for (auto& c : candidates) {
    if (auto d = screen(c, result.report)) result.kept.push_back(std::move(*d));
  }
  return result;
}

// ---------------------------------------------------------------------------

std::string render_chatml(const Dialogue& d) {
  if (auto r = validate(d)) {
    throw ChatmlError(r->reason, "cannot render invalid dialogue: " + std::string(to_string(r->reason)));
  }
  std::string out;
  for (const auto& t : d.turns) {
    out.append(kImStart);
    out += t.from == Role::human ? "user" : "assistant";
    out += '\n';
    out += t.value;
    out.append(kImEnd);
    out += '\n';
  }
  return out;
}

Dialogue parse_chatml(std::string_view s, Origin origin) {
  Dialogue d;
  d.origin = origin;
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (!s.substr(pos).starts_with(kImStart)) {
      throw ChatmlError(RejectReason::unparseable, "text outside of a message block at byte " + std::to_string(pos));
    }
    pos += kImStart.size();
    const std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) throw ChatmlError(RejectReason::unparseable, "unterminated role line");
    const std::string_view role = s.substr(pos, nl - pos);
    Turn t;
    if (role == "user") {
      t.from = Role::human;
    } else if (role == "assistant") {
      t.from = Role::gpt;
    } else {
      throw ChatmlError(RejectReason::unparseable, "unsupported role: " + std::string(role));
    }
    pos = nl + 1;
    const std::size_t end = s.find(kImEnd, pos);
    if (end == std::string_view::npos) throw ChatmlError(RejectReason::unparseable, "missing end marker");
    const std::string_view value = s.substr(pos, end - pos);
    if (value.find(kImStart) != std::string_view::npos) {
      throw ChatmlError(RejectReason::unparseable, "nested start marker");
    }
    t.value = std::string(value);
    pos = end + kImEnd.size();
    if (pos >= s.size() || s[pos] != '\n') throw ChatmlError(RejectReason::unparseable, "missing newline after end marker");
    ++pos;
    d.turns.push_back(std::move(t));
  }
  if (auto r = validate(d)) {
    throw ChatmlError(r->reason, "transcript violates dialogue invariants: " + std::string(to_string(r->reason)));
  }
  return d;
}

// ---------------------------------------------------------------------------

DatasetStats dataset_stats(std::span<const Dialogue> dialogues) {
  DatasetStats s;
  for (const auto& d : dialogues) {
    ++s.total;
    ++s.per_origin_counts[d.origin];
    ++s.turn_histogram[d.origin][d.human_turns()];
    if (!d.turns.empty()) {
      if (auto style = detect_enum_style(d.turns.front().value)) ++s.enum_style_histogram[d.origin][*style];
    }
  }
  return s;
}

json to_json(const DatasetStats& s) {
  json per_origin = json::object();
  for (const auto& [o, n] : s.per_origin_counts) per_origin[std::string(to_string(o))] = n;
  json turns = json::object();
  for (const auto& [o, hist] : s.turn_histogram) {
    json h = json::object();
    for (const auto& [k, n] : hist) h[std::to_string(k)] = n;
    turns[std::string(to_string(o))] = h;
  }
  json styles = json::object();
  for (const auto& [o, hist] : s.enum_style_histogram) {
    json h = json::object();
    for (const auto& [k, n] : hist) h[std::string(to_string(k))] = n;
    styles[std::string(to_string(o))] = h;
  }
  return {{"total", s.total},
          {"per_origin_counts", per_origin},
          {"turn_histogram", turns},
          {"enum_style_histogram", styles}};
}

json to_json(const FilterReport& r) {
  json rejected = json::object();
  for (const auto& [reason, n] : r.rejected) rejected[std::string(to_string(reason))] = n;
  return {{"input", r.input}, {"kept", r.kept}, {"rejected", rejected}};
}

// ---------------------------------------------------------------------------

namespace {

std::size_t draw_count(text::SplitMix64& rng, const std::array<double, 4>& weights) {
  double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (u < weights[i]) return i + 1;
    u -= weights[i];
  }
  return 1;
}

std::string_view between_fences(std::string_view prompt) {
  static constexpr std::string_view kFence = "\n---\n";
  const std::size_t open = prompt.find(kFence);
  if (open == std::string_view::npos) return prompt;
  const std::size_t begin = open + kFence.size();
  const std::size_t close = prompt.rfind("\n---");
  if (close == std::string_view::npos || close < begin) return prompt.substr(begin);
  return prompt.substr(begin, close - begin);
}

std::string first_words(std::string_view sentence, std::size_t n) {
  auto words = text::split_words(sentence);
  std::string out;
  for (std::size_t i = 0; i < words.size() && i < n; ++i) {
    if (i) out += ' ';
    out.append(words[i]);
  }
  return out;
}

std::vector<std::string> content_words(std::string_view chunk) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (auto w : text::split_words(chunk)) {
    std::string clean;
    std::size_t pos = 0;
    while (pos < w.size()) {
      const std::size_t at = pos;
      const char32_t cp = text::next_codepoint(w, pos);
      if (!text::is_punctuation(cp)) clean.append(w.substr(at, pos - at));
    }
    if (text::codepoint_count(clean) >= 2 && seen.insert(clean).second) out.push_back(std::move(clean));
  }
  return out;
}

std::string mock_standard(std::string_view chunk, text::SplitMix64& rng, std::size_t pairs, int malformed) {
  auto sentences = split_sentences(chunk);
  if (sentences.empty()) sentences.push_back("النص");
  std::vector<std::pair<std::string, std::string>> qa;
  for (std::size_t i = 0; i < pairs; ++i) {
    std::string_view s = sentences[(i + rng.below(sentences.size())) % sentences.size()];
    qa.emplace_back("سؤال: ماذا يذكر النص عن «" + first_words(s, 4) + "»؟", "جواب: " + std::string(s));
  }
  std::string out;
  switch (malformed) {
    case 0:
      return "";
    case 1:  // answer first
      return qa[0].second + "\n" + qa[0].first + "\n";
    case 2:  // dangling question
      for (const auto& [q, a] : qa) out += q + "\n" + a + "\n";
      return out + qa[0].first + "\n";
    case 3:  // blank answer
      return qa[0].first + "\nجواب:   \n";
    case 4:  // no labels at all
      return std::string(sentences[0]) + "\n";
    default:
      break;
  }
  for (const auto& [q, a] : qa) out += q + "\n" + a + "\n";
  return out;
}

std::string mock_mcq(std::string_view chunk, EnumStyle style, text::SplitMix64& rng, std::size_t items,
                     int malformed) {
  static const std::array<std::string_view, 10> distractors = {"برتقال", "سحاب", "قلم",   "جبل",    "نافذة",
                                                               "قطار",   "زيتون", "مصباح", "فراشة", "حديقة"};
  auto words = content_words(chunk);
  if (words.empty()) words.push_back("النص");
  auto sentences = split_sentences(chunk);
  std::set<std::string_view> in_chunk(words.begin(), words.end());
  std::vector<std::string_view> pool;
  for (auto d : distractors) {
    if (!in_chunk.count(d)) pool.push_back(d);
  }

  std::string out;
  for (std::size_t k = 0; k < items; ++k) {
    MCQItem item;
    item.style = style;
    const std::string& correct = words[rng.below(words.size())];
    std::string_view context = sentences.empty() ? chunk : sentences[rng.below(sentences.size())];
    item.question = "أي الكلمات التالية وردت في النص التالي: «" + first_words(context, 6) + "»؟";
    const std::size_t n_options = 4;
    item.answer_index = rng.below(n_options);
    // Rotate through the distractor pool from a random offset.
    std::size_t offset = rng.below(std::max<std::size_t>(pool.size(), 1));
    for (std::size_t i = 0; i < n_options; ++i) {
      if (i == item.answer_index) {
        item.options.push_back(correct);
      } else {
        item.options.emplace_back(pool[offset++ % pool.size()]);
      }
    }
    if (k == 0 && malformed >= 0) {
      switch (malformed) {
        case 0:
          return "";
        case 1: {  // answer marker beyond the options
          std::string body = render_mcq(item, false);
          return body + "\nالإجابة: " + std::string(enum_markers(style)[n_options]) + "\n";
        }
        case 2:  // duplicate options
          item.options[(item.answer_index + 1) % n_options] = item.options[item.answer_index];
          return render_mcq(item, true) + "\n";
        case 3:  // single option
          item.options = {correct};
          item.answer_index = 0;
          return render_mcq(item, true) + "\n";
        default: {  // mixed enumeration styles
          const EnumStyle other = style == EnumStyle::latin_letters ? EnumStyle::western_digits : EnumStyle::latin_letters;
          std::string body = item.question;
          for (std::size_t i = 0; i < n_options; ++i) {
            body += "\n";
            body.append(enum_markers(i == 1 ? other : style)[i]);
            body += ". " + item.options[i];
          }
          return body + "\nالإجابة: " + std::string(enum_markers(style)[item.answer_index]) + "\n";
        }
      }
    }
    if (k) out += "\n";
    out += render_mcq(item, true) + "\n";
  }
  return out;
}

}  // namespace

std::string MockGenerator::generate(std::string_view prompt, std::uint64_t seed) const {
  text::SplitMix64 rng(text::mix64(seed ^ text::fnv1a64(prompt)));
  const std::string_view chunk = between_fences(prompt);
  const std::size_t example_at = prompt.find("\nمثال:\n");
  const bool is_mcq = example_at != std::string_view::npos;
  const bool bad = rng.uniform() < cfg_.malformed_rate;
  const int kind = bad ? static_cast<int>(rng.below(5)) : -1;
  if (!is_mcq) return mock_standard(chunk, rng, draw_count(rng, cfg_.standard_pairs), kind);
  const std::string_view example = prompt.substr(example_at);
  const EnumStyle style = detect_enum_style(example.substr(0, example.find("\n---\n"))).value_or(EnumStyle::latin_letters);
  return mock_mcq(chunk, style, rng, draw_count(rng, cfg_.mcq_items), kind);
}

MCQItem FactoryConfig::default_exemplar() {
  MCQItem item;
  item.question = "ما هي عاصمة مصر؟";
  item.options = {"القاهرة", "الإسكندرية", "أسوان", "الأقصر"};
  item.answer_index = 0;
  item.style = EnumStyle::latin_letters;
  return item;
}

FactoryResult build_synthetic(std::span<const corpus::Document> docs, const GeneratorAdapter& gen,
                              const FactoryConfig& cfg) {
  if (!(cfg.mcq_fraction >= 0.0 && cfg.mcq_fraction <= 1.0)) throw std::invalid_argument("mcq_fraction must be in [0,1]");

  std::vector<const corpus::Document*> ordered;
  ordered.reserve(docs.size());
  for (const auto& d : docs) ordered.push_back(&d);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const corpus::Document* a, const corpus::Document* b) { return a->id < b->id; });

  struct Task {
    std::string id;
    std::string prompt;
    Template tmpl;
    std::uint64_t seed;
    std::string response;
  };
  std::vector<Task> tasks;
  for (const auto* doc : ordered) {
    const auto chunks = chunk_document(doc->text, cfg.max_chars);
    for (std::size_t i = 0; i < chunks.size(); ++i) {
      const std::uint64_t seed = text::mix64(cfg.seed ^ text::fnv1a64(doc->id) ^ text::mix64(i));
      text::SplitMix64 rng(seed);
      const Template tmpl = rng.uniform() < cfg.mcq_fraction ? Template::mcq : Template::standard;
      std::string prompt;
      if (tmpl == Template::mcq) {
        const MCQItem shown = restyle(cfg.exemplar, pick_style(rng.next(), cfg.style_weights));
        prompt = build_prompt(chunks[i], tmpl, &shown, std::nullopt, cfg.templates);
      } else {
        prompt = build_prompt(chunks[i], tmpl, nullptr, std::nullopt, cfg.templates);
      }
      tasks.push_back({doc->id + "#" + std::to_string(i), std::move(prompt), tmpl, seed, {}});
    }
  }

  const auto n = static_cast<std::int64_t>(tasks.size());
#pragma omp parallel for schedule(dynamic, 8) if (gen.concurrent_safe())
  for (std::int64_t i = 0; i < n; ++i) tasks[i].response = gen.generate(tasks[i].prompt, tasks[i].seed);

  FactoryResult result;
  result.prompts = tasks.size();
  for (auto& task : tasks) {
    Parsed<Dialogue> candidate = reject(RejectReason::unparseable);
    if (task.tmpl == Template::standard) {
      candidate = parse_dialogue_response(task.response);
    } else {
      auto items = parse_mcq_response(task.response);
      if (auto* r = std::get_if<Rejection>(&items)) {
        candidate = *r;
      } else {
        candidate = mcq_dialogue(std::get<std::vector<MCQItem>>(items));
      }
    }
    if (auto d = screen(candidate, result.report)) result.records.push_back({task.id, std::move(*d)});
  }
  return result;
}

std::string to_jsonl(const FactoryRecord& r) {
  json j;
  j["id"] = r.id;
  j["origin"] = to_string(r.dialogue.origin);
  j["text"] = render_chatml(r.dialogue);
  return j.dump();
}

FactoryRecord record_from_jsonl(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ChatmlError(RejectReason::unparseable, "record is not a JSON object");
  try {
    FactoryRecord r;
    r.id = j.at("id").get<std::string>();
    r.dialogue = parse_chatml(j.at("text").get<std::string>(), parse_origin(j.at("origin").get<std::string>()));
    return r;
  } catch (const json::exception& e) {
    throw ChatmlError(RejectReason::unparseable, std::string("bad record: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ChatmlError(RejectReason::unparseable, std::string("bad record: ") + e.what());
  }
}

Parsed<Dialogue> dialogue_from_json(const json& j, Origin origin) {
  const json* turns = &j;
  if (j.is_object()) {
    // Single-pair records ({"instruction","output"} or {"inputs","targets"}).
    for (auto [q, a] : {std::pair{"instruction", "output"}, std::pair{"inputs", "targets"}}) {
      if (!j.contains(q) || !j.contains(a)) continue;
      if (!j[q].is_string() || !j[a].is_string()) return reject(RejectReason::unparseable, "pair fields must be strings");
      Dialogue d;
      d.origin = origin;
      d.turns = {{Role::human, j[q].get<std::string>()}, {Role::gpt, j[a].get<std::string>()}};
      if (auto r = validate(d)) return *r;
      return d;
    }
    auto it = j.find("conversations");
    if (it == j.end()) return reject(RejectReason::unparseable, "no conversations field");
    turns = &*it;
  }
  if (!turns->is_array()) return reject(RejectReason::unparseable, "turn list is not an array");
  Dialogue d;
  d.origin = origin;
  for (const auto& t : *turns) {
    if (!t.is_object() || !t.contains("from") || !t.contains("value") || !t["from"].is_string() ||
        !t["value"].is_string()) {
      return reject(RejectReason::unparseable, "turn needs string from/value");
    }
    const auto from = t["from"].get<std::string>();
    Turn turn;
    if (from == "human" || from == "user") {
      turn.from = Role::human;
    } else if (from == "gpt" || from == "assistant") {
      turn.from = Role::gpt;
    } else {
      return reject(RejectReason::unparseable, "unknown role: " + from);
    }
    turn.value = t["value"].get<std::string>();
    d.turns.push_back(std::move(turn));
  }
  if (auto r = validate(d)) return *r;
  return d;
}

}  // namespace lmdata::instruct
