#include <random>
#include <sstream>

#include "doctest.h"
#include "lmdata/filters.hpp"
#include "lmdata/text.hpp"
#include "synth.hpp"

using namespace lmdata::filters;
using lmdata::corpus::Document;
using lmdata::corpus::Source;

namespace {

std::string repeat(const std::string& s, std::size_t n) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += s;
  return out;
}

Document doc(std::string text, Source src = Source::culturax, bool url = true) {
  Document d;
  d.id = "t";
  d.text = std::move(text);
  d.source = src;
  if (url) d.url = "https://example.org";
  return d;
}

const CompiledFilters& planted_filters() {
  static const CompiledFilters f(synth::planted_filter_config());
  return f;
}

std::string normal_lines(std::size_t n) {
  synth::Rng rng(n);
  return synth::clean_body(rng, n, 12);
}

std::uint64_t words(const std::string& s) {
  std::istringstream in(s);
  std::uint64_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

}  // namespace

TEST_CASE("safety: three distinct unsafe phrases remove, two keep") {
  const auto& f = planted_filters();
  const std::string base = normal_lines(6);
  auto d3 = doc(base + " unsafeterm alpha unsafeterm beta UNSAFETERM Gamma");
  auto d2 = doc(base + " unsafeterm alpha unsafeterm beta unsafeterm beta unsafeterm beta");
  CHECK(apply_filter(d3, Rule::safety, f).rule == Rule::safety);
  CHECK(apply_filter(d2, Rule::safety, f).keep);
}

TEST_CASE("safety: culturax doc without URL is removed, other sources are not") {
  const auto& f = planted_filters();
  CHECK(apply_filter(doc(normal_lines(6), Source::culturax, false), Rule::safety, f).rule == Rule::safety);
  CHECK(apply_filter(doc(normal_lines(6), Source::sanad, false), Rule::safety, f).keep);
  auto blank = doc(normal_lines(6));
  blank.url = "   ";
  CHECK_FALSE(apply_filter(blank, Rule::safety, f).keep);
}

TEST_CASE("ads: five hits keep, six remove") {
  const auto& f = planted_filters();
  const std::string base = normal_lines(6);
  CHECK(apply_filter(doc(base + repeat(" adpromo", 5)), Rule::ads, f).keep);
  const auto d = apply_filter(doc(base + repeat(" AdPromo", 6)), Rule::ads, f);
  CHECK(d.rule == Rule::ads);
  CHECK_FALSE(d.keep);
}

TEST_CASE("lines: three lines remove, four keep") {
  const auto& f = planted_filters();
  CHECK(apply_filter(doc(normal_lines(3)), Rule::lines, f).rule == Rule::lines);
  CHECK(apply_filter(doc(normal_lines(4)), Rule::lines, f).keep);
}

TEST_CASE("lines: more than half short lines remove, exactly half keep") {
  const auto& f = planted_filters();
  const std::string four_short = "سطر طويل فيه كلمات كثيرة\nقصير\nقصير جدا\nواحد\nاثنان ثلاثة\nسطر طويل آخر هنا";
  CHECK(apply_filter(doc(four_short), Rule::lines, f).rule == Rule::lines);
  const std::string three_short = "سطر طويل فيه كلمات\nقصير\nسطر طويل آخر\nواحد\nاثنان ثلاثة\nسطر طويل ثالث";
  CHECK(apply_filter(doc(three_short), Rule::lines, f).keep);
  // Three-word lines are not short.
  CHECK(apply_filter(doc("أ ب ج\nد ه و\nز ح ط\nي ك ل"), Rule::lines, f).keep);
}

TEST_CASE("lines: blank lines do not count") {
  const auto& f = planted_filters();
  CHECK_FALSE(apply_filter(doc(normal_lines(3) + "\n\n   \n"), Rule::lines, f).keep);
}

TEST_CASE("chars: 94% permissible removes, 95% keeps") {
  const auto& f = planted_filters();
  CHECK(apply_filter(doc(repeat("ب", 95) + repeat("☃", 5)), Rule::chars, f).keep);
  CHECK(apply_filter(doc(repeat("ب", 94) + repeat("☃", 6)), Rule::chars, f).rule == Rule::chars);
  CHECK(apply_filter(doc(repeat("a", 190) + repeat("€", 10)), Rule::chars, f).keep);
  CHECK_FALSE(apply_filter(doc(repeat("a", 189) + repeat("€", 11)), Rule::chars, f).keep);
}

TEST_CASE("gopher: one stop word with min_stop_words 2 removes") {
  auto cfg = synth::planted_filter_config();
  cfg.gopher.min_stop_words = 2;
  const CompiledFilters f(cfg);
  std::string text = "في";
  for (int i = 0; i < 59; ++i) text += " الكتاب";
  const auto d = apply_filter(doc(text), Rule::gopher, f);
  CHECK(d.rule == Rule::gopher);
  CHECK(d.detail.find("stop words") != std::string::npos);
  CHECK(apply_filter(doc(text + " من"), Rule::gopher, f).keep);
}

TEST_CASE("gopher: word count, word length and symbol checks") {
  const auto& f = planted_filters();
  CHECK(apply_filter(doc(repeat("في الكتاب ", 24) + "في"), Rule::gopher, f).rule == Rule::gopher);  // 49 words
  CHECK(apply_filter(doc(repeat("في الكتاب ", 25)), Rule::gopher, f).keep);                          // 50 words
  CHECK_FALSE(apply_filter(doc(repeat("في الكتاب# ", 30)), Rule::gopher, f).keep);
  CHECK_FALSE(apply_filter(doc(repeat("من ١٢٣٤ ٥٦٧ ", 30)), Rule::gopher, f).keep);  // too few alphabetic words
}

TEST_CASE("empty document is removed by the lines rule") {
  const auto d = planted_filters().apply_all(doc(""));
  CHECK(d.rule == Rule::lines);
}

TEST_CASE("first failing rule is attributed") {
  // Fails safety (no URL) and gopher (too few words).
  const auto d = planted_filters().apply_all(doc("قصير\nقصير\nقصير", Source::culturax, false));
  CHECK(d.rule == Rule::safety);
}

TEST_CASE("FilterDecision keep iff rule none") {
  const auto pc = synth::make_planted_corpus(500, 3);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  for (const auto& d : pc.docs) {
    const auto o = process_document(d, pipe, tok);
    CHECK(o.decision.keep == (o.decision.rule == Rule::none));
  }
}

TEST_CASE("100 docs with 10 planted safety, ads and lines violations") {
  synth::Rng rng(100);
  std::vector<Document> docs;
  for (int i = 0; i < 100; ++i) {
    Document d = doc(synth::clean_body(rng, 6, 10));
    d.id = std::to_string(i);
    if (i < 10) {
      d.url.reset();
    } else if (i < 20) {
      d.text += repeat(" adpromo", 6);
    } else if (i < 30) {
      d.text = synth::clean_body(rng, 3, 20);
    }
    docs.push_back(std::move(d));
  }
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto r = run_pipeline(docs, pipe, tok);
  CHECK(r.report.docs_removed(Rule::safety) == 10);
  CHECK(r.report.docs_removed(Rule::ads) == 10);
  CHECK(r.report.docs_removed(Rule::lines) == 10);
  CHECK(r.report.docs_removed(Rule::chars) == 0);
  CHECK(r.report.docs_removed(Rule::gopher) == 0);
  CHECK(r.kept.size() == 70);
}

TEST_CASE("planted corpus: report matches construction") {
  const auto pc = synth::make_planted_corpus(2000, 17);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto r = run_pipeline(pc.docs, pipe, tok);
  for (const auto& [src, c] : r.report.sources) {
    const auto expected = pc.removed_by_source.count(src) ? pc.removed_by_source.at(src) : std::array<std::uint64_t, 5>{};
    for (std::size_t i = 0; i < 5; ++i) CHECK(c.docs_removed[i] == expected[i]);
  }
  REQUIRE(r.kept.size() == pc.kept_ids.size());
  for (const auto& d : r.kept) CHECK(pc.kept_ids.count(d.id) == 1);

  // Token accounting against a stream-based word count.
  std::uint64_t tokens_in = 0;
  std::array<std::uint64_t, 5> removed{};
  for (std::size_t i = 0; i < pc.docs.size(); ++i) {
    tokens_in += words(pc.docs[i].text);
    if (pc.planted[i] != Rule::none) removed[static_cast<std::size_t>(pc.planted[i])] += words(pc.docs[i].text);
  }
  std::uint64_t tokens_out = 0;
  for (const auto& d : r.kept) tokens_out += words(d.text);
  const auto total = r.report.total();
  CHECK(total.tokens_in == tokens_in);
  CHECK(total.tokens_out == tokens_out);
  for (std::size_t i = 0; i < 5; ++i) CHECK(total.tokens_removed[i] == removed[i]);
  std::uint64_t removed_sum = 0;
  for (auto t : total.tokens_removed) removed_sum += t;
  CHECK(static_cast<std::int64_t>(total.tokens_in) ==
        static_cast<std::int64_t>(removed_sum + total.tokens_out) + total.tokens_edit_delta);
}

TEST_CASE("kept documents are normalized and stripped") {
  Document d = doc("عنوان\n2023-04-01\n" + normal_lines(6));
  d.text.replace(d.text.find("ا"), std::string("ا").size(), "ﺍ");
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto r = run_pipeline(std::vector<Document>{d}, pipe, tok);
  REQUIRE(r.kept.size() == 1);
  CHECK(r.kept[0].text.find("ﺍ") == std::string::npos);
  CHECK(r.kept[0].text.find("2023") == std::string::npos);
  CHECK(r.report.total().tokens_edit_delta == 2);
}

TEST_CASE("docs_in == removed + kept for every source") {
  const auto pc = synth::make_planted_corpus(1000, 23);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::CharacterTokenizer tok;
  const auto r = run_pipeline(pc.docs, pipe, tok);
  for (const auto& [src, c] : r.report.sources) {
    std::uint64_t removed = 0;
    for (auto n : c.docs_removed) removed += n;
    CHECK(c.docs_in == removed + c.docs_out);
  }
}

TEST_CASE("parallel pipeline equals the reference path") {
  const auto pc = synth::make_planted_corpus(1500, 29);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto a = run_pipeline(pc.docs, pipe, tok);
  const auto b = run_pipeline_reference(pc.docs, pipe, tok);
  CHECK(a.report == b.report);
  CHECK(a.kept == b.kept);
  CHECK(to_json(a.report).dump() == to_json(b.report).dump());
}

TEST_CASE("sharded runs merge to the single-shard report") {
  const auto pc = synth::make_planted_corpus(1200, 31);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto whole = run_pipeline(pc.docs, pipe, tok);
  for (std::size_t shards : {2u, 3u, 4u, 7u}) {
    auto merged = CleaningReport::empty(tok.name());
    std::vector<Document> kept;
    const std::size_t per = (pc.docs.size() + shards - 1) / shards;
    for (std::size_t s = 0; s < shards; ++s) {
      const std::size_t lo = std::min(pc.docs.size(), s * per);
      const std::size_t hi = std::min(pc.docs.size(), lo + per);
      const auto part = run_pipeline(std::span<const Document>(pc.docs).subspan(lo, hi - lo), pipe, tok);
      merged = merge_reports(merged, part.report);
      kept.insert(kept.end(), part.kept.begin(), part.kept.end());
    }
    CHECK(to_json(merged).dump() == to_json(whole.report).dump());
    CHECK(kept == whole.kept);
  }
}

TEST_CASE("merge is commutative, associative and has zero as identity") {
  std::mt19937_64 rng(41);
  auto random_report = [&] {
    auto r = CleaningReport::empty("identity");
    for (Source s : {Source::culturax, Source::sanad, Source::ebook, Source::other}) {
      if (rng() % 3 == 0) continue;
      SourceCounts& c = r.sources[s];
      c.docs_in = rng() % 1000;
      c.tokens_in = rng() % 100000;
      c.docs_out = rng() % 1000;
      c.tokens_out = rng() % 100000;
      c.tokens_edit_delta = static_cast<std::int64_t>(rng() % 200) - 100;
      for (auto& n : c.docs_removed) n = rng() % 100;
      for (auto& n : c.tokens_removed) n = rng() % 10000;
    }
    return r;
  };
  const auto zero = CleaningReport::empty("identity");
  for (int i = 0; i < 100; ++i) {
    const auto a = random_report();
    const auto b = random_report();
    const auto c = random_report();
    CHECK(to_json(merge_reports(a, zero)) == to_json(a));
    CHECK(merge_reports(a, b) == merge_reports(b, a));
    CHECK(merge_reports(merge_reports(a, b), c) == merge_reports(a, merge_reports(b, c)));
  }
}

TEST_CASE("merge rejects mismatched schemas") {
  auto a = CleaningReport::empty("identity");
  auto b = CleaningReport::empty("character");
  CHECK_THROWS_AS(merge_reports(a, b), ReportSchemaError);
  auto c = CleaningReport::empty("identity");
  c.rules.pop_back();
  CHECK_THROWS_AS(merge_reports(a, c), ReportSchemaError);
}

TEST_CASE("report JSON round trip and table CSV") {
  const auto pc = synth::make_planted_corpus(300, 37);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto r = run_pipeline(pc.docs, pipe, tok).report;
  CHECK(report_from_json(to_json(r)) == r);
  const std::string csv = to_table_csv(r);
  CHECK(csv.rfind("dataset,tokens_before,docs_before,tokens_after,tokens_kept_pct,docs_after,docs_kept_pct\n", 0) == 0);
  CHECK(csv.find("\ntotal,") != std::string::npos);
  CHECK_THROWS_AS(report_from_json(nlohmann::json::object()), ReportSchemaError);
}

TEST_CASE("empty input gives an empty report") {
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto r = run_pipeline({}, pipe, tok);
  CHECK(r.kept.empty());
  CHECK(r.report.sources.empty());
  CHECK(r.report.total().docs_in == 0);
}

TEST_CASE("filter config from JSON") {
  const auto cfg = filter_config_from_json(
      {{"unsafe_phrases", {"a b"}}, {"ad_max_hits", 2}, {"gopher", {{"min_words", 10}}}, {"safety_sources", {"sanad"}}});
  CHECK(cfg.unsafe_phrases == std::vector<std::string>{"a b"});
  CHECK(cfg.ad_max_hits == 2);
  CHECK(cfg.gopher.min_words == 10);
  CHECK(cfg.safety_sources == std::set<Source>{Source::sanad});
  CHECK_FALSE(cfg.gopher.stop_words.empty());
  CHECK_THROWS_AS(filter_config_from_json({{"bogus", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(filter_config_from_json({{"short_line_frac_max", 1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(filter_config_from_json({{"ad_phrases", {" "}}}), std::invalid_argument);
  CHECK_THROWS_AS(filter_config_from_json({{"gopher", {{"min_words", 10}, {"max_words", 5}}}}), std::invalid_argument);
  CHECK(filter_config_from_json(to_json(cfg)).ad_max_hits == 2);
}

TEST_CASE("pipeline config with char map overrides") {
  const auto pipe = pipeline_from_json({{"char_map", {{"overrides", {{"U+0623", "ا"}}}}}});
  CHECK(lmdata::corpus::normalize_chars("أ", pipe.char_map) == "ا");
  CHECK_THROWS(pipeline_from_json({{"char_map", {{"mode", "bogus"}}}}));
}
