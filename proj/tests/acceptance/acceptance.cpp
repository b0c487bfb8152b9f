// Runs the ten acceptance criteria and prints one PASS/FAIL line each.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "lmdata/eval.hpp"
#include "lmdata/filters.hpp"
#include "lmdata/instruct.hpp"
#include "lmdata/mixture.hpp"
#include "lmdata/schedule.hpp"
#include "lmdata/tokenization.hpp"
#include "synth.hpp"

namespace {

using lmdata::corpus::Document;
using lmdata::corpus::Source;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Check {
 public:
  void require(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
    ++total_;
  }
  void note(const std::string& s) { notes_ += (notes_.empty() ? "" : "; ") + s; }
  Outcome outcome() const {
    Outcome o;
    o.pass = failed_ == 0;
    std::ostringstream ss;
    ss << total_ - failed_ << "/" << total_ << " checks";
    if (!notes_.empty()) ss << "; " << notes_;
    for (const auto& f : failures_) ss << "; failed: " << f;
    o.detail = ss.str();
    return o;
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
  std::string notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

bool rel_close(double a, double b, double rel) {
  if (a == b) return true;
  return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// Minimal UTF-8 decoder for the oracles below (input is valid UTF-8).
std::u32string utf32(std::string_view s) {
  std::u32string out;
  for (std::size_t i = 0; i < s.size();) {
    const unsigned char c = static_cast<unsigned char>(s[i]);
    const int len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
    char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
    for (int k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
    out.push_back(cp);
    i += static_cast<std::size_t>(len);
  }
  return out;
}

bool is_ws(char32_t c) {
  return c == U' ' || (c >= 0x09 && c <= 0x0D) || c == 0x85 || c == 0xA0 || c == 0x1680 ||
         (c >= 0x2000 && c <= 0x200A) || c == 0x2028 || c == 0x2029 || c == 0x202F || c == 0x205F || c == 0x3000;
}

// ---------------------------------------------------------------------------

Outcome mixture_table() {
  using namespace lmdata::mixture;
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<SourceStats> src{{"english", 619000000000ULL, Language::english},
                                     {"arabic", 115000000000ULL, Language::arabic}};
  const auto shares = token_shares(src);
  const auto samp = sampling_percentages({{Language::arabic, 4.6}}, group_tokens(src));
  const double en = shares.at(Language::english) * 100;
  const double ar = shares.at(Language::arabic) * 100;
  const double s_ar = samp.at(Language::arabic) * 100;
  const double s_en = samp.at(Language::english) * 100;
  c.require(std::abs(en - 84.0) <= 0.5, "english token share " + fmt(en));
  c.require(std::abs(ar - 16.0) <= 0.5, "arabic token share " + fmt(ar));
  c.require(std::abs(s_ar - 82.0) <= 0.5, "arabic sampling " + fmt(s_ar));
  c.require(std::abs(s_en - 18.0) <= 0.5, "english sampling " + fmt(s_en));
  c.require(std::abs(en - 84.3) < 0.05 && std::abs(s_ar - 82.1) < 0.05, "derived values 84.3 / 82.1");
  const double dt = seconds_since(t0);
  c.require(dt < 1.0, "runtime " + fmt(dt) + "s");
  c.note("tokens " + fmt(en) + "/" + fmt(ar) + "%, sampling " + fmt(s_ar) + "/" + fmt(s_en) + "%, " + fmt(dt) + "s");
  return c.outcome();
}

Outcome schedule_endpoints() {
  using namespace lmdata::schedule;
  Check c;
  for (const auto& [name, spec] : {std::pair{"early", ScheduleSpec::early()}, std::pair{"late", ScheduleSpec::late()}}) {
    c.require(rel_close(lr_at(10000, spec), 5e-4, 1e-12), std::string(name) + " lr(10000)");
    c.require(rel_close(lr_at(500000, spec), 2.5e-6, 1e-12), std::string(name) + " lr(500000)");
    const auto curve = emit_curve(spec, 100);
    bool monotone = true;
    double prev = INFINITY;
    for (const auto& [step, lr] : curve) {
      if (step < spec.warmup_steps) continue;
      if (lr > prev) monotone = false;
      prev = lr;
    }
    c.require(monotone, std::string(name) + " non-increasing after warmup");
  }
  const double total = static_cast<double>(training_tokens(ScheduleSpec::early(), BatchGeometry{6, 2, 8, 4096}));
  c.require(std::abs(total - 197e9) / 197e9 <= 0.02, "total tokens " + fmt(total));
  c.note("total tokens " + fmt(total));
  return c.outcome();
}

Outcome filter_boundaries() {
  using namespace lmdata::filters;
  Check c;
  const CompiledFilters f(synth::planted_filter_config());
  synth::Rng rng(1);
  const std::string body = synth::clean_body(rng, 6, 12);
  auto doc = [](std::string text, Source src = Source::culturax, bool url = true) {
    Document d;
    d.id = "b";
    d.text = std::move(text);
    d.source = src;
    if (url) d.url = "https://example.org";
    return d;
  };
  auto rep = [](const std::string& s, int n) {
    std::string o;
    for (int i = 0; i < n; ++i) o += s;
    return o;
  };
  auto removed_by = [&](const Document& d, Rule r) { return apply_filter(d, r, f).rule == r; };
  auto kept = [&](const Document& d, Rule r) { return apply_filter(d, r, f).keep; };

  c.require(removed_by(doc(body + " unsafeterm alpha unsafeterm beta unsafeterm gamma"), Rule::safety), "3 unsafe removes");
  c.require(kept(doc(body + " unsafeterm alpha unsafeterm beta"), Rule::safety), "2 unsafe keeps");
  c.require(kept(doc(body + rep(" adpromo", 5)), Rule::ads), "5 ads keep");
  c.require(removed_by(doc(body + rep(" adpromo", 6)), Rule::ads), "6 ads remove");
  synth::Rng r3(3);
  c.require(removed_by(doc(synth::clean_body(r3, 3, 12)), Rule::lines), "3 lines remove");
  c.require(kept(doc(synth::clean_body(r3, 4, 12)), Rule::lines), "4 lines keep");
  c.require(removed_by(doc("سطر طويل فيه كلمات كثيرة\nقصير\nقصير جدا\nواحد\nاثنان ثلاثة\nسطر طويل آخر هنا"), Rule::lines),
            "4 of 6 short lines remove");
  c.require(removed_by(doc(rep("ب", 94) + rep("☃", 6)), Rule::chars), "94% chars removes");
  c.require(kept(doc(rep("ب", 95) + rep("☃", 5)), Rule::chars), "95% chars keeps");
  c.require(removed_by(doc(body, Source::culturax, false), Rule::safety), "missing URL removes under culturax");
  c.require(kept(doc(body, Source::sanad, false), Rule::safety), "missing URL keeps outside culturax");
  auto gcfg = synth::planted_filter_config();
  gcfg.gopher.min_stop_words = 2;
  const CompiledFilters g(gcfg);
  c.require(apply_filter(doc("في" + rep(" الكتاب", 59)), Rule::gopher, g).rule == Rule::gopher, "1 stop word removes");
  // The clean body passes every rule end to end.
  c.require(f.apply_all(doc(body)).keep, "clean body kept");
  return c.outcome();
}

Outcome planted_corpus() {
  using namespace lmdata::filters;
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  const auto pc = synth::make_planted_corpus(10000, 2024);
  const Pipeline pipe(synth::planted_filter_config());
  const lmdata::tokenization::IdentityTokenizer tok;
  const auto whole = run_pipeline(pc.docs, pipe, tok);
  std::array<std::uint64_t, 5> planted_total{};
  for (const auto& [src, counts] : pc.removed_by_source)
    for (std::size_t i = 0; i < 5; ++i) planted_total[i] += counts[i];
  bool exact = true;
  for (const auto& [src, sc] : whole.report.sources) {
    const auto expected = pc.removed_by_source.count(src) ? pc.removed_by_source.at(src) : std::array<std::uint64_t, 5>{};
    for (std::size_t i = 0; i < 5; ++i) exact = exact && sc.docs_removed[i] == expected[i];
  }
  c.require(exact, "per-source per-rule removals equal planted counts");
  c.require(whole.kept.size() == pc.kept_ids.size(), "kept count");
  bool ids = true;
  for (const auto& d : whole.kept) ids = ids && pc.kept_ids.count(d.id) == 1;
  c.require(ids, "kept ids");

  auto merged = CleaningReport::empty(tok.name());
  const std::size_t per = pc.docs.size() / 4;
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t lo = s * per;
    const std::size_t n = s == 3 ? pc.docs.size() - lo : per;
    merged = merge_reports(merged, run_pipeline(std::span<const Document>(pc.docs).subspan(lo, n), pipe, tok).report);
  }
  c.require(to_json(merged).dump(2) == to_json(whole.report).dump(2), "4-way merged JSON byte-identical");
  const double dt = seconds_since(t0);
  c.require(dt < 30.0, "runtime " + fmt(dt) + "s");
  std::ostringstream ss;
  ss << "planted safety/ads/lines/chars/gopher " << planted_total[0] << "/" << planted_total[1] << "/"
     << planted_total[2] << "/" << planted_total[3] << "/" << planted_total[4] << ", " << fmt(dt) << "s";
  c.note(ss.str());
  return c.outcome();
}

// Splits every word into pieces of at most `width` codepoints.
class WidthTokenizer final : public lmdata::tokenization::TokenizerAdapter {
 public:
  explicit WidthTokenizer(std::size_t width) : width_(width) {}
  std::size_t count_tokens(std::string_view text) const override {
    std::size_t n = 0;
    for (auto w : lmdata::tokenization::segment_words(text)) n += (utf32(w).size() + width_ - 1) / width_;
    return n;
  }
  std::string name() const override { return "width" + std::to_string(width_); }

 private:
  std::size_t width_;
};

Outcome fertility_oracle() {
  using namespace lmdata::tokenization;
  Check c;
  synth::Rng rng(55);
  const CharacterTokenizer chr;
  const IdentityTokenizer id;
  const GreedyVocabTokenizer vocab("v", {"ال", "كت", "اب", "كتاب", "ab", "abc", "12", "ة"});
  for (int iter = 0; iter < 100; ++iter) {
    const auto corpus = synth::random_corpus(rng, 1 + synth::pick(rng, 60), 80);
    // Brute force: words and non-space codepoints counted per document, summed, divided.
    std::uint64_t words = 0;
    std::uint64_t chars = 0;
    std::uint64_t vocab_tokens = 0;
    for (const auto& d : corpus) {
      bool in_word = false;
      for (char32_t cp : utf32(d.text)) {
        if (is_ws(cp)) {
          in_word = false;
        } else {
          ++chars;
          if (!in_word) ++words;
          in_word = true;
        }
      }
      vocab_tokens += vocab.count_tokens(d.text);
    }
    if (words == 0) continue;
    const double oracle_chr = static_cast<double>(chars) / static_cast<double>(words);
    const double oracle_vocab = static_cast<double>(vocab_tokens) / static_cast<double>(words);
    const auto fc = fertility(corpus, chr);
    c.require(fc.total_words == words, "word count");
    c.require(rel_close(fc.fertility, oracle_chr, 1e-12), "character fertility vs oracle");
    c.require(rel_close(fertility(corpus, vocab).fertility, oracle_vocab, 1e-12), "vocab fertility vs oracle");
    c.require(fertility(corpus, id).fertility == 1.0, "identity exactly 1.0");
    const double f1 = fertility(corpus, WidthTokenizer(1)).fertility;
    const double f2 = fertility(corpus, WidthTokenizer(2)).fertility;
    const double f3 = fertility(corpus, WidthTokenizer(3)).fertility;
    c.require(f1 >= f2 && f2 >= f3 && f3 >= 1.0, "finer never lower");
    c.require(fc.fertility >= fertility(corpus, vocab).fertility, "character >= vocab");
  }
  return c.outcome();
}

// Independent character trigram model with the same smoothing contract.
class TrigramOracle {
 public:
  TrigramOracle(std::string_view text, double k) : k_(k) {
    std::set<char32_t> seen;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::u32string h = {kBos, kBos};
      for (char32_t c : utf32(line)) {
        seen.insert(c);
        hist_[h] += 1;
        tri_[h + c] += 1;
        h = std::u32string{h[1], c};
      }
    }
    v_ = static_cast<double>(seen.size()) + 1.0;
  }

  double score(std::string_view context, std::string_view cont) const {
    const auto nl = context.rfind('\n');
    const std::u32string last = utf32(nl == std::string_view::npos ? context : context.substr(nl + 1));
    std::u32string h = {kBos, kBos};
    for (char32_t c : last) h = std::u32string{h[1], c};
    double sum = 0.0;
    for (char32_t c : utf32(cont)) {
      const double hc = hist_.count(h) ? hist_.at(h) : 0.0;
      const double tc = tri_.count(h + c) ? tri_.at(h + c) : 0.0;
      sum += std::log((tc + k_) / (hc + k_ * v_));
      h = std::u32string{h[1], c};
    }
    return sum;
  }

 private:
  static constexpr char32_t kBos = 0x2;
  double k_;
  double v_ = 0.0;
  std::map<std::u32string, double> hist_;
  std::map<std::u32string, double> tri_;
};

Outcome cf_oracle() {
  using namespace lmdata::eval;
  Check c;
  synth::Rng rng(66);
  const auto items = synth::random_items(rng, 200);
  const auto scorer = NgramScorer::from_default_corpus();
  const TrigramOracle oracle(default_ngram_corpus(), 0.1);
  for (Norm norm : {Norm::none, Norm::by_bytes}) {
    CfOptions opts;
    opts.norm = norm;
    const auto r = evaluate_cf(items, scorer, opts);
    std::size_t correct = 0;
    bool all_match = true;
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& it = items[i];
      const std::string ctx = (it.context ? *it.context + "\n" : "") + it.question + "\nالإجابة:";
      std::size_t best = 0;
      double best_score = -INFINITY;
      for (std::size_t j = 0; j < it.choices.size(); ++j) {
        double s = oracle.score(ctx, " " + it.choices[j]);
        if (norm == Norm::by_bytes) s /= static_cast<double>(it.choices[j].size());
        if (!rel_close(s, r.outcomes[i].scores[j], 1e-12)) all_match = false;
        if (s > best_score) {
          best_score = s;
          best = j;
        }
      }
      if (best != r.outcomes[i].prediction) all_match = false;
      correct += best == it.gold_index;
    }
    const std::string tag = norm == Norm::none ? "raw" : "by_bytes";
    c.require(all_match, tag + " per-item scores and predictions");
    c.require(r.correct == correct && r.overall == static_cast<double>(correct) / items.size(), tag + " accuracy");
    // Micro-average law.
    std::size_t n = 0;
    std::size_t k = 0;
    double weighted = 0.0;
    for (const auto& [cat, cc] : r.category_counts) {
      n += cc.n;
      k += cc.correct;
      weighted += r.per_category.at(cat) * static_cast<double>(cc.n);
    }
    c.require(n == r.n && k == r.correct, tag + " category counts sum");
    c.require(std::abs(weighted / static_cast<double>(n) - r.overall) < 1e-12, tag + " micro average law");
    c.note(tag + " accuracy " + fmt(r.overall));
  }

  // -6 over 2 bytes vs -10 over 5 bytes.
  class Flip final : public Scorer {
   public:
    double loglikelihood(std::string_view, std::string_view cont) const override { return cont == " ab" ? -6.0 : -10.0; }
    std::string name() const override { return "flip"; }
  };
  BenchmarkItem it;
  it.id = "flip";
  it.question = "q";
  it.choices = {"ab", "abcde"};
  it.gold_index = 1;
  const std::vector<BenchmarkItem> one{it};
  CfOptions raw;
  CfOptions nb;
  nb.norm = Norm::by_bytes;
  const auto a = evaluate_cf(one, Flip(), raw);
  const auto b = evaluate_cf(one, Flip(), nb);
  c.require(a.outcomes[0].prediction == 0 && b.outcomes[0].prediction == 1, "normalization flips the prediction");
  c.require(b.outcomes[0].scores == std::vector<double>{-3.0, -2.0}, "per-byte scores -3 and -2");
  return c.outcome();
}

double oracle_f1(const std::vector<std::string>& g, const std::vector<std::string>& p, const std::vector<std::string>& labels) {
  // Confusion matrix indexed [gold][pred].
  std::vector<std::vector<std::size_t>> m(labels.size(), std::vector<std::size_t>(labels.size(), 0));
  auto idx = [&](const std::string& s) { return static_cast<std::size_t>(std::find(labels.begin(), labels.end(), s) - labels.begin()); };
  for (std::size_t i = 0; i < g.size(); ++i) ++m[idx(g[i])][idx(p[i])];
  double sum = 0.0;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    std::size_t tp = m[l][l];
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t o = 0; o < labels.size(); ++o) {
      if (o == l) continue;
      fp += m[o][l];
      fn += m[l][o];
    }
    const std::size_t denom = 2 * tp + fp + fn;
    sum += denom == 0 ? 0.0 : static_cast<double>(2 * tp) / static_cast<double>(denom);
  }
  return sum / static_cast<double>(labels.size());
}

Outcome f1_oracle() {
  Check c;
  std::mt19937_64 rng(77);
  const std::vector<std::string> labels{"صح", "خطأ"};
  std::size_t exact = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<std::string> g(n);
    std::vector<std::string> p(n);
    const double bias = static_cast<double>(rng() % 101) / 100.0;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = labels[rng() % 2];
      p[i] = std::uniform_real_distribution<double>(0, 1)(rng) < bias ? g[i] : labels[rng() % 2];
    }
    exact += lmdata::eval::f1_macro(g, p, labels) == oracle_f1(g, p, labels);
  }
  c.require(exact == 1000, std::to_string(exact) + "/1000 exact");
  const std::vector<std::string> g{"T", "T", "F", "F"};
  const std::vector<std::string> p{"T", "F", "F", "F"};
  const std::vector<std::string> tf{"T", "F"};
  const double v = lmdata::eval::f1_macro(g, p, tf);
  c.require(std::abs(v - 0.7333) < 5e-5 && v == (2.0 / 3.0 + 0.8) / 2.0, "worked example " + fmt(v));
  c.note("worked example " + fmt(v));
  return c.outcome();
}

std::vector<lmdata::instruct::Dialogue> mutants_of(const lmdata::instruct::Dialogue& d, synth::Rng& rng) {
  using namespace lmdata::instruct;
  std::vector<Dialogue> out;
  auto add = [&](auto&& mutate) {
    Dialogue m = d;
    mutate(m);
    out.push_back(std::move(m));
  };
  add([](Dialogue& m) { m.turns.clear(); });
  add([](Dialogue& m) { m.turns.resize(1); });
  add([](Dialogue& m) { m.turns[0].from = Role::gpt; });
  add([](Dialogue& m) { m.turns.back().from = Role::human; });
  add([](Dialogue& m) { m.turns.pop_back(); });
  add([](Dialogue& m) { m.turns.insert(m.turns.begin() + 1, m.turns[0]); });
  add([&](Dialogue& m) { m.turns[synth::pick(rng, m.turns.size())].value = ""; });
  add([&](Dialogue& m) { m.turns[synth::pick(rng, m.turns.size())].value = " \t\n"; });
  add([&](Dialogue& m) { m.turns[synth::pick(rng, m.turns.size())].value += std::string(kImEnd); });
  add([&](Dialogue& m) { m.turns[synth::pick(rng, m.turns.size())].value.insert(0, std::string(kImStart)); });
  return out;
}

Outcome chatml_roundtrip() {
  using namespace lmdata::instruct;
  Check c;
  synth::Rng rng(88);
  std::size_t ok = 0;
  std::vector<Parsed<Dialogue>> mutants;
  for (int i = 0; i < 10000; ++i) {
    const Dialogue d = synth::random_dialogue(rng);
    ok += parse_chatml(render_chatml(d), d.origin) == d;
    if (i < 1000)
      for (auto& m : mutants_of(d, rng)) mutants.emplace_back(std::move(m));
  }
  c.require(ok == 10000, std::to_string(ok) + "/10000 round trips");
  std::size_t mcq_ok = 0;
  for (EnumStyle style : kEnumStyles) {
    for (int i = 0; i < 500; ++i) {
      const MCQItem item = synth::random_mcq(rng, style);
      const auto back = parse_mcq(render_mcq(item));
      mcq_ok += std::holds_alternative<MCQItem>(back) && std::get<MCQItem>(back) == item;
    }
  }
  c.require(mcq_ok == 2000, std::to_string(mcq_ok) + "/2000 MCQ round trips over 4 styles");
  const std::size_t n = mutants.size();
  const auto r = filter_dialogues(std::move(mutants));
  c.require(r.kept.empty() && r.report.rejected_total() == n, std::to_string(r.report.rejected_total()) + "/" +
                                                                   std::to_string(n) + " mutants rejected");
  c.note(std::to_string(n) + " mutants rejected");
  return c.outcome();
}

Outcome instruct_factory() {
  using namespace lmdata::instruct;
  Check c;
  const auto docs = synth::factory_corpus(1000, 99);
  const MockGenerator gen;
  const FactoryConfig cfg;
  auto run = [&](int threads) {
    omp_set_num_threads(threads);
    const auto r = build_synthetic(docs, gen, cfg);
    std::string out;
    for (const auto& rec : r.records) out += to_jsonl(rec) + "\n";
    return std::pair{r, out};
  };
  const auto [result, jsonl] = run(4);
  const auto [rerun, jsonl2] = run(1);
  omp_set_num_threads(omp_get_num_procs());
  c.require(jsonl == jsonl2, "rerun byte-identical");

  std::vector<Dialogue> dialogues;
  std::istringstream in(jsonl);
  std::size_t valid = 0;
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) {
    ++lines;
    try {
      const auto rec = record_from_jsonl(line);
      const auto j = nlohmann::json::parse(line);
      const bool good = !validate(rec.dialogue) && render_chatml(rec.dialogue) == j.at("text").get<std::string>();
      valid += good;
      dialogues.push_back(rec.dialogue);
    } catch (const std::exception&) {
    }
  }
  c.require(lines > 0 && valid == lines, std::to_string(valid) + "/" + std::to_string(lines) + " JSONL records valid");
  const auto stats = dataset_stats(dialogues);
  auto mode = [](const std::map<std::size_t, std::size_t>& h) {
    std::size_t best = 0;
    std::size_t count = 0;
    for (auto [k, v] : h)
      if (v > count) {
        best = k;
        count = v;
      }
    return best;
  };
  const auto& hs = stats.turn_histogram.at(Origin::rephrase_standard);
  const auto& hm = stats.turn_histogram.at(Origin::rephrase_mcq);
  c.require(mode(hs) == 2, "standard mode is 2 turns");
  c.require(mode(hm) == 1, "MCQ mode is 1 turn");
  const auto& styles = stats.enum_style_histogram.at(Origin::rephrase_mcq);
  c.require(styles.count(EnumStyle::latin_letters) &&
                styles.at(EnumStyle::latin_letters) * 2 > stats.per_origin_counts.at(Origin::rephrase_mcq),
            "MCQ dominated by Latin letters");
  c.note(std::to_string(lines) + " records from " + std::to_string(result.prompts) + " prompts, standard 2-turn " +
         std::to_string(hs.count(2) ? hs.at(2) : 0) + "/" + std::to_string(stats.per_origin_counts.at(Origin::rephrase_standard)) +
         ", MCQ 1-turn " + std::to_string(hm.count(1) ? hm.at(1) : 0) + "/" +
         std::to_string(stats.per_origin_counts.at(Origin::rephrase_mcq)));
  return c.outcome();
}

Outcome diff_report() {
  using namespace lmdata::eval;
  Check c;
  synth::Rng rng(1010);
  const auto items = synth::random_items(rng, 300);
  const auto letters = default_letters();
  // Hand computation: oracle is always right; the constant scorer ties and
  // picks index 0 in both formats, or per byte the longest choice in CF.
  std::size_t gold0 = 0;
  std::size_t longest = 0;
  for (const auto& it : items) {
    gold0 += it.gold_index == 0;
    std::size_t best = 0;
    for (std::size_t j = 1; j < it.choices.size(); ++j)
      if (it.choices[j].size() > it.choices[best].size()) best = j;
    longest += it.gold_index == best;
  }
  const double acc0 = static_cast<double>(gold0) / static_cast<double>(items.size());
  const double acc_long = static_cast<double>(longest) / static_cast<double>(items.size());

  std::vector<DiffRow> rows;
  for (Norm norm : {Norm::none, Norm::by_bytes}) {
    CfOptions cf;
    cf.norm = norm;
    const OracleScorer cf_oracle(cf_gold_map(items), false);
    const OracleScorer mcf_oracle(mcf_gold_map(items, letters), false);
    const auto o = diff_row("oracle", evaluate_cf(items, cf_oracle, cf), evaluate_mcf(items, mcf_oracle));
    const auto k = diff_row("constant", evaluate_cf(items, ConstantScorer(), cf), evaluate_mcf(items, ConstantScorer()));
    const std::string tag = norm == Norm::none ? "raw" : "by_bytes";
    c.require(o.cf == 1.0 && o.mcf == 1.0 && o.diff == 0.0, tag + " oracle diff 0");
    const double expected_cf = norm == Norm::none ? acc0 : acc_long;
    c.require(k.cf == expected_cf && k.mcf == acc0 && k.diff == expected_cf - acc0, tag + " constant diff");
    rows.push_back(o);
    rows.push_back(k);
  }
  const std::string csv = diff_csv(rows);
  c.require(csv.rfind("model,cf,mcf,diff\noracle,1,1,0\n", 0) == 0, "CSV layout");
  c.note("constant CF(by_bytes) - MCF = " + fmt(acc_long - acc0));
  return c.outcome();
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"mixture shares and sampling percentages", mixture_table},
      {"schedule endpoints and token budget", schedule_endpoints},
      {"filter boundary suite", filter_boundaries},
      {"planted corpus report and sharded merge", planted_corpus},
      {"fertility oracle equivalence", fertility_oracle},
      {"cloze evaluation oracle equivalence", cf_oracle},
      {"f1 macro oracle", f1_oracle},
      {"ChatML round trip and mutant rejection", chatml_roundtrip},
      {"instruction factory end to end", instruct_factory},
      {"CF minus MCF diff report", diff_report},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << "[" << (o.pass ? "PASS" : "FAIL") << "] " << (i + 1) << ". " << criteria[i].first << " (" << o.detail
              << ")\n";
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
