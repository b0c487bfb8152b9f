#include <unicode/normalizer2.h>
#include <unicode/unistr.h>

#include <random>
#include <sstream>

#include "doctest.h"
#include "lmdata/corpus.hpp"
#include "lmdata/text.hpp"

using namespace lmdata::corpus;
namespace text = lmdata::text;

namespace {

std::string icu_nfkc(char32_t cp) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfkc = icu::Normalizer2::getNFKCInstance(status);
  REQUIRE(U_SUCCESS(status));
  icu::UnicodeString in(static_cast<UChar32>(cp));
  icu::UnicodeString out = nfkc->normalize(in, status);
  REQUIRE(U_SUCCESS(status));
  std::string utf8;
  out.toUTF8String(utf8);
  return utf8;
}

bool icu_assigned(char32_t cp) { return u_isdefined(static_cast<UChar32>(cp)); }

const std::pair<char32_t, char32_t> kArabicBlocks[] = {
    {0x0600, 0x06FF}, {0x0750, 0x077F}, {0x08A0, 0x08FF}, {0xFB50, 0xFDFF}, {0xFE70, 0xFEFF}};

IngestResult ingest(const std::string& s) {
  std::istringstream in(s);
  return ingest_jsonl(in);
}

}  // namespace

TEST_CASE("ingest: plain record passes through") {
  auto r = ingest(R"({"id":"a","text":"hi"})" "\n");
  REQUIRE(r.documents.size() == 1);
  CHECK(r.documents[0].id == "a");
  CHECK(r.documents[0].text == "hi");
  CHECK(r.documents[0].source == Source::other);
  CHECK_FALSE(r.documents[0].url.has_value());
  CHECK(r.rejects.empty());
}

TEST_CASE("ingest: missing text is rejected") {
  auto r = ingest(R"({"id":"a"})" "\n");
  CHECK(r.documents.empty());
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].line == 1);
  CHECK(r.rejects[0].reason == "missing_text");
}

TEST_CASE("ingest: malformed middle line keeps order") {
  auto r = ingest("{\"text\":\"one\"}\n{not json\n{\"text\":\"three\",\"source\":\"sanad\"}\n");
  REQUIRE(r.documents.size() == 2);
  CHECK(r.documents[0].id == "1");
  CHECK(r.documents[1].id == "3");
  CHECK(r.documents[1].source == Source::sanad);
  REQUIRE(r.rejects.size() == 1);
  CHECK(r.rejects[0].line == 2);
  CHECK(r.rejects[0].reason == "malformed_json");
  CHECK(to_jsonl(r.rejects[0]) == R"({"line":2,"reason":"malformed_json"})");
}

TEST_CASE("ingest: invalid UTF-8 and bad fields") {
  auto r = ingest("{\"text\":\"a\xff\"}\n{\"text\":1}\n{\"text\":\"x\",\"source\":\"web\"}\n[1]\n\n");
  CHECK(r.documents.empty());
  REQUIRE(r.rejects.size() == 5);
  CHECK(r.rejects[0].reason == "invalid_utf8");
  CHECK(r.rejects[1].reason == "text_not_string");
  CHECK(r.rejects[2].reason == "unknown_source");
  CHECK(r.rejects[3].reason == "not_an_object");
  CHECK(r.rejects[4].reason == "empty_record");
}

TEST_CASE("ingest: yielded + rejected == input lines on random input") {
  std::mt19937_64 rng(11);
  const std::string lines[] = {R"({"text":"ok"})", R"({"id":5,"text":"n"})", "garbage", R"({"url":"u"})",
                               R"({"text":"t","url":"  "})"};
  for (int iter = 0; iter < 50; ++iter) {
    std::string body;
    const int n = 1 + static_cast<int>(rng() % 40);
    for (int i = 0; i < n; ++i) body += lines[rng() % 5] + "\n";
    auto r = ingest(body);
    CHECK(r.documents.size() + r.rejects.size() == static_cast<std::size_t>(n));
  }
}

TEST_CASE("documents round-trip through JSONL") {
  Document d{"x", std::string("https://a"), "نص\n\"quoted\"", Source::ebook};
  std::string reason;
  auto back = parse_record(to_jsonl(d), 1, reason);
  REQUIRE(back.has_value());
  CHECK(*back == d);
}

TEST_CASE("normalize_chars: examples") {
  const CharMap& m = CharMap::arabic_default();
  CHECK(normalize_chars("hello 123", m) == "hello 123");
  CHECK(normalize_chars("ﺑ", m) == "ب");
  CHECK(normalize_chars("ﷲ", m) == "الله");
  CHECK(normalize_chars("ﻻ", m) == "لا");
  // Orthographic variants are not merged.
  CHECK(normalize_chars("أإآا", m) == "أإآا");
}

TEST_CASE("built-in table equals ICU NFKC on the Arabic blocks") {
  const CharMap& m = CharMap::arabic_default();
  std::size_t expected_entries = 0;
  for (auto [lo, hi] : kArabicBlocks) {
    for (char32_t cp = lo; cp <= hi; ++cp) {
      std::string self;
      text::append_utf8(self, cp);
      const std::string* mapped = m.lookup(cp);
      if (!icu_assigned(cp)) {
        // Unassigned in this ICU build; the table must leave it alone too.
        CHECK(mapped == nullptr);
        continue;
      }
      const std::string oracle = icu_nfkc(cp);
      if (oracle == self) {
        CHECK_MESSAGE(mapped == nullptr, "unexpected entry for U+" << std::hex << static_cast<unsigned>(cp));
      } else {
        ++expected_entries;
        REQUIRE_MESSAGE(mapped != nullptr, "missing entry for U+" << std::hex << static_cast<unsigned>(cp));
        CHECK(*mapped == oracle);
      }
    }
  }
  CHECK(builtin_compat_entry_count() == expected_entries);
}

TEST_CASE("normalize_chars is idempotent on random strings") {
  std::mt19937_64 rng(5);
  const CharMap& m = CharMap::arabic_default();
  for (int iter = 0; iter < 2000; ++iter) {
    std::u32string s;
    const int n = 1 + static_cast<int>(rng() % 20);
    for (int i = 0; i < n; ++i) {
      switch (rng() % 4) {
        case 0: {
          auto [lo, hi] = kArabicBlocks[rng() % 5];
          s += static_cast<char32_t>(lo + rng() % (hi - lo + 1));
          break;
        }
        case 1:
          s += static_cast<char32_t>(0x20 + rng() % 0x5F);
          break;
        case 2:
          s += static_cast<char32_t>(0x0620 + rng() % 0x2B);
          break;
        default:
          s += static_cast<char32_t>(0x4E00 + rng() % 0x100);
          break;
      }
    }
    const std::string once = normalize_chars(text::encode(s), m);
    CHECK(normalize_chars(once, m) == once);
  }
}

TEST_CASE("effective table is closed") {
  const CharMap& m = CharMap::arabic_default();
  for (const auto& [cp, repl] : m.entries()) {
    for (char32_t out : text::decode(repl)) CHECK(m.lookup(out) == nullptr);
  }
}

TEST_CASE("overrides layer on top of NFKC") {
  CharMap m(CharMapMode::nfkc_plus_table, {{0x0623, "ا"}, {0x0649, "ي"}});
  CHECK(normalize_chars("أحمد على", m) == "احمد علي");
  // Built-in outputs are re-mapped through the overrides: FE87 is alef
  // with hamza below isolated, which NFKC maps to U+0625.
  CHECK(normalize_chars("ﺃ", m) == "ا");
  CHECK(normalize_chars("ﻯ", m) == "ي");
  for (const auto& [cp, repl] : m.entries()) {
    for (char32_t out : text::decode(repl)) CHECK(m.lookup(out) == nullptr);
  }
}

TEST_CASE("overrides that chain are rejected") {
  CHECK_THROWS_AS(CharMap(CharMapMode::table_only, {{0x0623, "ا"}, {0x0627, "x"}}), std::invalid_argument);
  CHECK_THROWS_AS(CharMap(CharMapMode::table_only, {{0x0623, "\xff"}}), std::invalid_argument);
}

TEST_CASE("table_only mode ignores the built-in table") {
  CharMap m(CharMapMode::table_only, {{U'x', "y"}});
  CHECK(normalize_chars("ﺑx", m) == "ﺑy");
}

TEST_CASE("strip_title_date: examples") {
  const TitleDateStripper s;
  Document d{"1", std::nullopt, "عنوان\n2023-04-01\nنص المقال...", Source::other};
  CHECK(strip_title_date(d, s).text == "نص المقال...");

  Document plain{"2", std::nullopt, "نص عادي\nسطر ثان", Source::other};
  CHECK(strip_title_date(plain, s).text == plain.text);

  Document mid{"3", std::nullopt, "مقدمة\nسطر\n2023-04-01\nبقية", Source::other};
  CHECK(strip_title_date(mid, s).text == mid.text);
}

TEST_CASE("strip_title_date: date variants") {
  const TitleDateStripper s;
  CHECK(s.header_lines("٢٠٢٣/٠٤/٠١\nنص") == 1);
  CHECK(s.header_lines("01.04.2023 10:30\nنص") == 1);
  CHECK(s.header_lines("أخبار\n15-3-2021\nنص") == 2);
  CHECK(s.header_lines("نص بلا تاريخ") == 0);
  CHECK(s.header_lines("") == 0);
  // Title too long to be a title.
  std::string long_title;
  for (int i = 0; i < 16; ++i) long_title += "كلمة ";
  CHECK(s.header_lines(long_title + "\n2023-04-01\nنص") == 0);
}

TEST_CASE("strip_title_date keeps every byte after the header") {
  std::mt19937_64 rng(9);
  const TitleDateStripper s;
  const std::string heads[] = {"", "عنوان\n2023-04-01\n", "2022/1/2\n", "عنوان\n", "x\n\n"};
  const std::string bodies[] = {"نص\r\nآخر", "", "\n\n", "2023-04-01 وسط", "a b c"};
  for (int i = 0; i < 200; ++i) {
    const std::string text = heads[rng() % 5] + bodies[rng() % 5];
    Document d{"x", std::nullopt, text, Source::other};
    const std::string out = strip_title_date(d, s).text;
    REQUIRE(out.size() <= text.size());
    CHECK(text.substr(text.size() - out.size()) == out);
    const std::string removed = text.substr(0, text.size() - out.size());
    CHECK(std::count(removed.begin(), removed.end(), '\n') <= 2);
  }
}
