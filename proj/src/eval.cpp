#include "lmdata/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "lmdata/text.hpp"

namespace lmdata::eval {

using nlohmann::json;

void BenchmarkItem::validate() const {
  if (choices.size() < 2 || choices.size() > 5) {
    throw std::invalid_argument("item " + id + ": expected 2..5 choices, got " + std::to_string(choices.size()));
  }
  for (const auto& c : choices) {
    if (c.empty()) throw std::invalid_argument("item " + id + ": empty choice");
  }
  if (gold_index >= choices.size()) throw std::invalid_argument("item " + id + ": gold_index out of range");
}

std::vector<BenchmarkItem> items_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("benchmark file must be a JSON array");
  std::vector<BenchmarkItem> items;
  items.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const json& e = j[i];
    if (!e.is_object()) throw std::invalid_argument("item " + std::to_string(i) + " is not an object");
    try {
      BenchmarkItem item;
      if (auto it = e.find("id"); it != e.end()) {
        item.id = it->is_string() ? it->get<std::string>() : it->dump();
      } else {
        item.id = std::to_string(i);
      }
      item.question = e.at("question").get<std::string>();
      item.choices = e.at("choices").get<std::vector<std::string>>();
      item.gold_index = e.at("gold_index").get<std::size_t>();
      if (auto it = e.find("category"); it != e.end() && !it->is_null()) item.category = it->get<std::string>();
      if (auto it = e.find("context"); it != e.end() && !it->is_null()) item.context = it->get<std::string>();
      item.validate();
      items.push_back(std::move(item));
    } catch (const json::exception& ex) {
      throw std::invalid_argument("item " + std::to_string(i) + ": " + ex.what());
    }
  }
  return items;
}

json to_json(const BenchmarkItem& item) {
  json j = {{"id", item.id}, {"question", item.question}, {"choices", item.choices}, {"gold_index", item.gold_index}};
  if (item.category) j["category"] = *item.category;
  if (item.context) j["context"] = *item.context;
  return j;
}

// ---------------------------------------------------------------------------

OracleScorer::OracleScorer(std::map<std::string, std::string> gold_by_context, bool anti)
    : gold_(gold_by_context.begin(), gold_by_context.end()), anti_(anti) {}

double OracleScorer::loglikelihood(std::string_view context, std::string_view continuation) const {
  auto it = gold_.find(context);
  if (it == gold_.end()) {
    const auto cut = context.rfind("\n\n");
    if (cut != std::string_view::npos) it = gold_.find(context.substr(cut + 2));
  }
  if (it == gold_.end()) throw ScorerError("oracle has no entry for this context");
  const bool gold = it->second == continuation;
  return gold != anti_ ? 0.0 : kOracleReject;
}

namespace {

// Boundary symbol padding the start of a text.
constexpr char32_t kBos = 0x2;

}  // namespace

NgramScorer::NgramScorer(std::string_view training_text, double k) : k_(k) {
  if (!(k > 0.0)) throw std::invalid_argument("add-k constant must be positive");
  std::set<char32_t> symbols;
  for (auto line : text::split_lines(training_text)) {
    char32_t a = kBos;
    char32_t b = kBos;
    std::size_t pos = 0;
    while (pos < line.size()) {
      const char32_t c = text::next_codepoint(line, pos);
      symbols.insert(c);
      history_counts_[key2(a, b)] += 1.0;
      trigram_counts_[{key2(a, b), c}] += 1.0;
      a = b;
      b = c;
    }
  }
  // One extra slot for unseen symbols.
  vocab_ = static_cast<double>(symbols.size() + 1);
}

double NgramScorer::log_prob(char32_t a, char32_t b, char32_t c) const {
  const auto h = key2(a, b);
  double hist = 0.0;
  if (auto it = history_counts_.find(h); it != history_counts_.end()) hist = it->second;
  double tri = 0.0;
  if (auto it = trigram_counts_.find({h, c}); it != trigram_counts_.end()) tri = it->second;
  return std::log((tri + k_) / (hist + k_ * vocab_));
}

double NgramScorer::loglikelihood(std::string_view context, std::string_view continuation) const {
  if (continuation.empty()) throw ScorerError("empty continuation");
  // History comes from the last two codepoints of the context's final line.
  char32_t a = kBos;
  char32_t b = kBos;
  const auto nl = context.rfind('\n');
  const std::string_view last_line = nl == std::string_view::npos ? context : context.substr(nl + 1);
  std::size_t pos = 0;
  while (pos < last_line.size()) {
    a = b;
    b = text::next_codepoint(last_line, pos);
  }
  double total = 0.0;
  pos = 0;
  while (pos < continuation.size()) {
    const char32_t c = text::next_codepoint(continuation, pos);
    total += log_prob(a, b, c);
    a = b;
    b = c;
  }
  return total;
}

NgramScorer NgramScorer::from_default_corpus() { return NgramScorer(default_ngram_corpus()); }

NgramScorer NgramScorer::from_file(const std::string& path, double k) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read n-gram corpus: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return NgramScorer(ss.str(), k);
}

std::string_view default_ngram_corpus() {
  static constexpr std::string_view corpus =
      "العلم نور والجهل ظلام، ومن طلب العلم سهر الليالي.\n"
      "تقع القاهرة على ضفاف نهر النيل، وهي أكبر مدن مصر.\n"
      "يتكون الماء من ذرتين من الهيدروجين وذرة من الأكسجين.\n"
      "الشمس نجم يقع في مركز المجموعة الشمسية، وتدور حوله الكواكب.\n"
      "تعلم القراءة والكتابة في سن مبكرة يساعد الأطفال على النجاح.\n"
      "اللغة العربية من أكثر اللغات انتشارا في العالم.\n"
      "يحتاج النبات إلى الماء والضوء والهواء لكي ينمو.\n"
      "كانت مكتبة بغداد من أعظم المكتبات في التاريخ.\n"
      "الرياضيات علم يدرس الأعداد والأشكال والعلاقات بينها.\n"
      "يبلغ عدد أيام السنة ثلاثمائة وخمسة وستين يوما.\n"
      "الصحة تاج على رؤوس الأصحاء لا يراه إلا المرضى.\n"
      "تشتهر المدن الساحلية بصيد الأسماك والتجارة البحرية.\n"
      "الإجابة: نعم، هذه العبارة صحيحة.\n"
      "الإجابة: لا، هذه العبارة خاطئة.\n"
      "الإجابة: صح\n"
      "الإجابة: خطأ\n"
      "The quick brown fox jumps over the lazy dog.\n"
      "Answer: A\n"
      "Answer: B\n";
  return corpus;
}

// ---------------------------------------------------------------------------

namespace {

void append_header(std::string& out, const BenchmarkItem& item) {
  if (item.context && !item.context->empty()) {
    out += *item.context;
    out += '\n';
  }
  out += item.question;
  out += '\n';
}

}  // namespace

std::string render_cf_context(const BenchmarkItem& item, const PromptFormat& fmt) {
  std::string out;
  append_header(out, item);
  out += fmt.answer_cue;
  return out;
}

std::string render_mcf_context(const BenchmarkItem& item, std::span<const std::string> letters,
                               const PromptFormat& fmt) {
  if (letters.size() < item.choices.size()) {
    throw std::invalid_argument("item " + item.id + " has more choices than letters");
  }
  std::string out;
  append_header(out, item);
  for (std::size_t i = 0; i < item.choices.size(); ++i) {
    out += letters[i];
    out += ". ";
    out += item.choices[i];
    out += '\n';
  }
  out += fmt.answer_cue;
  return out;
}

Norm parse_norm(std::string_view name) {
  if (name == "none") return Norm::none;
  if (name == "bytes" || name == "by_bytes") return Norm::by_bytes;
  if (name == "tokens" || name == "by_tokens") return Norm::by_tokens;
  throw std::invalid_argument("unknown normalization: " + std::string(name));
}

std::string_view to_string(Norm n) {
  switch (n) {
    case Norm::none:
      return "none";
    case Norm::by_bytes:
      return "by_bytes";
    case Norm::by_tokens:
      return "by_tokens";
  }
  return "none";
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::accuracy:
      return "accuracy";
    case Metric::accuracy_norm:
      return "accuracy_norm";
    case Metric::f1_macro:
      return "f1_macro";
  }
  return "accuracy";
}

std::string_view to_string(Format f) { return f == Format::cf ? "cf" : "mcf"; }

std::vector<std::string> default_letters() { return {"A", "B", "C", "D", "E"}; }

// ---------------------------------------------------------------------------

namespace {

std::string category_of(const BenchmarkItem& item) {
  return item.category ? *item.category : std::string(kUncategorized);
}

// Scores every candidate for one item. `divisor(i)` is the normalizer for
// candidate i (1 for raw scores).
template <class Divisor>
ItemOutcome score_item(const BenchmarkItem& item, const Scorer& scorer, const std::string& context,
                       std::span<const std::string> candidates, const std::string& prefix, Divisor divisor) {
  ItemOutcome o;
  o.id = item.id;
  o.category = category_of(item);
  o.gold = item.gold_index;
  try {
    item.validate();
    o.scores.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      const double ll = scorer.loglikelihood(context, prefix + candidates[i]);
      if (std::isnan(ll)) throw ScorerError("scorer returned NaN");
      o.scores.push_back(ll / divisor(i));
    }
  } catch (const std::exception& e) {
    o.errored = true;
    o.error = e.what();
    o.scores.clear();
    return o;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < o.scores.size(); ++i) {
    if (o.scores[i] > o.scores[best]) best = i;
  }
  o.prediction = best;
  o.tie = std::count(o.scores.begin(), o.scores.end(), o.scores[best]) > 1;
  o.correct = best == item.gold_index;
  return o;
}

template <class Fn>
std::vector<ItemOutcome> score_all(std::size_t n, bool parallel, Fn fn) {
  std::vector<ItemOutcome> out(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16) if (parallel)
  for (std::int64_t i = 0; i < count; ++i) out[i] = fn(static_cast<std::size_t>(i));
  return out;
}

EvalResult aggregate(std::vector<ItemOutcome> outcomes, Metric metric, Format format) {
  EvalResult r;
  r.metric = metric;
  r.format = format;
  for (const auto& o : outcomes) {
    if (o.errored) {
      ++r.errored;
      continue;
    }
    ++r.n;
    r.ties += o.tie ? 1 : 0;
    r.correct += o.correct ? 1 : 0;
    auto& c = r.category_counts[o.category];
    ++c.n;
    c.correct += o.correct ? 1 : 0;
  }
  r.overall = r.n ? static_cast<double>(r.correct) / static_cast<double>(r.n) : 0.0;
  for (const auto& [cat, c] : r.category_counts) {
    r.per_category[cat] = static_cast<double>(c.correct) / static_cast<double>(c.n);
  }
  r.outcomes = std::move(outcomes);
  return r;
}

}  // namespace

EvalResult evaluate_cf(std::span<const BenchmarkItem> items, const Scorer& scorer, const CfOptions& opts) {
  const tokenization::IdentityTokenizer identity;
  const tokenization::TokenizerAdapter& tok = opts.tokenizer ? *opts.tokenizer : identity;
  const bool parallel = opts.parallel && scorer.concurrent_safe() && tok.concurrent_safe();
  auto outcomes = score_all(items.size(), parallel, [&](std::size_t i) {
    const auto& item = items[i];
    auto divisor = [&](std::size_t c) -> double {
      switch (opts.norm) {
        case Norm::none:
          return 1.0;
        case Norm::by_bytes:
          return static_cast<double>(item.choices[c].size());
        case Norm::by_tokens:
          return static_cast<double>(std::max<std::size_t>(tok.count_tokens(item.choices[c]), 1));
      }
      return 1.0;
    };
    return score_item(item, scorer, render_cf_context(item, opts.format), item.choices,
                      opts.format.continuation_prefix, divisor);
  });
  return aggregate(std::move(outcomes), opts.norm == Norm::none ? Metric::accuracy : Metric::accuracy_norm,
                   Format::cf);
}

EvalResult evaluate_mcf(std::span<const BenchmarkItem> items, const Scorer& scorer, const McfOptions& opts) {
  for (const auto& item : items) {
    if (item.choices.size() > opts.letters.size()) {
      throw std::invalid_argument("item " + item.id + " has more choices than letters");
    }
  }
  auto outcomes = score_all(items.size(), opts.parallel && scorer.concurrent_safe(), [&](std::size_t i) {
    const auto& item = items[i];
    const std::span<const std::string> letters(opts.letters.data(), item.choices.size());
    return score_item(item, scorer, render_mcf_context(item, letters, opts.format), letters,
                      opts.format.continuation_prefix, [](std::size_t) { return 1.0; });
  });
  return aggregate(std::move(outcomes), Metric::accuracy, Format::mcf);
}

// ---------------------------------------------------------------------------

std::string render_tf_exemplar(const BenchmarkItem& item, const PromptFormat& fmt) {
  return item.question + "\n" + fmt.answer_cue + fmt.continuation_prefix + item.choices.at(item.gold_index);
}

std::string render_tf_query(const BenchmarkItem& item, const PromptFormat& fmt) {
  return item.question + "\n" + fmt.answer_cue;
}

std::vector<std::size_t> pick_exemplars(const BenchmarkItem& item, std::size_t pool_size,
                                        const TrueFalseOptions& opts) {
  if (pool_size < opts.shots) {
    throw std::invalid_argument("exemplar pool has " + std::to_string(pool_size) + " items, need " +
                                std::to_string(opts.shots));
  }
  std::vector<std::size_t> idx(pool_size);
  for (std::size_t i = 0; i < pool_size; ++i) idx[i] = i;
  text::SplitMix64 rng(text::mix64(opts.seed ^ text::fnv1a64(item.id)));
  for (std::size_t i = 0; i < opts.shots; ++i) {
    std::swap(idx[i], idx[i + rng.below(pool_size - i)]);
  }
  idx.resize(opts.shots);
  return idx;
}

std::string render_tf_context(const BenchmarkItem& item, std::span<const BenchmarkItem> pool,
                              const TrueFalseOptions& opts) {
  std::string out;
  for (std::size_t i : pick_exemplars(item, pool.size(), opts)) {
    out += render_tf_exemplar(pool[i], opts.format);
    out += "\n\n";
  }
  out += render_tf_query(item, opts.format);
  return out;
}

EvalResult evaluate_true_false(std::span<const BenchmarkItem> items, std::span<const BenchmarkItem> pool,
                               const Scorer& scorer, const TrueFalseOptions& opts) {
  if (opts.labels.size() != 2) throw std::invalid_argument("true/false evaluation needs exactly two labels");
  if (pool.size() < opts.shots) {
    throw std::invalid_argument("exemplar pool has " + std::to_string(pool.size()) + " items, need " +
                                std::to_string(opts.shots));
  }
  std::set<std::string_view> pool_ids;
  for (const auto& p : pool) {
    if (p.choices != opts.labels) throw std::invalid_argument("exemplar " + p.id + " does not use the label pair");
    p.validate();
    pool_ids.insert(p.id);
  }
  for (const auto& item : items) {
    if (item.choices != opts.labels) throw std::invalid_argument("item " + item.id + " does not use the label pair");
    if (pool_ids.count(item.id)) throw std::invalid_argument("item " + item.id + " also appears in the exemplar pool");
  }

  auto outcomes = score_all(items.size(), opts.parallel && scorer.concurrent_safe(), [&](std::size_t i) {
    const auto& item = items[i];
    return score_item(item, scorer, render_tf_context(item, pool, opts), item.choices,
                      opts.format.continuation_prefix, [](std::size_t) { return 1.0; });
  });
  EvalResult r = aggregate(std::move(outcomes), Metric::f1_macro, Format::cf);

  std::vector<std::string> golds;
  std::vector<std::string> preds;
  std::map<std::string, std::pair<std::vector<std::string>, std::vector<std::string>>> by_category;
  for (const auto& o : r.outcomes) {
    if (o.errored) continue;
    golds.push_back(opts.labels[o.gold]);
    preds.push_back(opts.labels[o.prediction]);
    by_category[o.category].first.push_back(golds.back());
    by_category[o.category].second.push_back(preds.back());
  }
  r.overall = golds.empty() ? 0.0 : f1_macro(golds, preds, opts.labels);
  for (const auto& [cat, gp] : by_category) r.per_category[cat] = f1_macro(gp.first, gp.second, opts.labels);
  return r;
}

double f1_macro(std::span<const std::string> golds, std::span<const std::string> preds,
                std::span<const std::string> labels, bool exclude_absent) {
  if (golds.size() != preds.size()) throw std::invalid_argument("golds and preds differ in length");
  if (labels.empty()) throw std::invalid_argument("no labels");
  auto label_index = [&](const std::string& s) {
    auto it = std::find(labels.begin(), labels.end(), s);
    if (it == labels.end()) throw std::invalid_argument("value not among labels: " + s);
    return static_cast<std::size_t>(it - labels.begin());
  };
  std::vector<std::size_t> tp(labels.size()), fp(labels.size()), fn(labels.size());
  for (std::size_t i = 0; i < golds.size(); ++i) {
    const std::size_t g = label_index(golds[i]);
    const std::size_t p = label_index(preds[i]);
    if (g == p) {
      ++tp[g];
    } else {
      ++fp[p];
      ++fn[g];
    }
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t l = 0; l < labels.size(); ++l) {
    const std::size_t denom = 2 * tp[l] + fp[l] + fn[l];
    if (denom == 0) {
      if (!exclude_absent) ++counted;
      continue;
    }
    sum += 2.0 * static_cast<double>(tp[l]) / static_cast<double>(denom);
    ++counted;
  }
  return counted ? sum / static_cast<double>(counted) : 0.0;
}

// ---------------------------------------------------------------------------

json to_json(const EvalResult& r, bool with_outcomes) {
  json j = {{"metric", to_string(r.metric)},
            {"format", to_string(r.format)},
            {"overall", r.overall},
            {"per_category", r.per_category},
            {"n", r.n},
            {"correct", r.correct},
            {"errored", r.errored},
            {"ties", r.ties}};
  if (with_outcomes) {
    json items = json::array();
    for (const auto& o : r.outcomes) {
      json e = {{"id", o.id}, {"category", o.category}, {"gold", o.gold}};
      if (o.errored) {
        e["error"] = o.error;
      } else {
        e["prediction"] = o.prediction;
        e["correct"] = o.correct;
        e["tie"] = o.tie;
      }
      items.push_back(std::move(e));
    }
    j["items"] = std::move(items);
  }
  return j;
}

namespace {

void put_gold(std::map<std::string, std::string>& m, std::string key, std::string gold) {
  auto [it, inserted] = m.emplace(std::move(key), gold);
  if (!inserted && it->second != gold) throw std::invalid_argument("items share a context but not a gold answer");
}

}  // namespace

std::map<std::string, std::string> cf_gold_map(std::span<const BenchmarkItem> items, const PromptFormat& fmt) {
  std::map<std::string, std::string> m;
  for (const auto& item : items)
    put_gold(m, render_cf_context(item, fmt), fmt.continuation_prefix + item.choices.at(item.gold_index));
  return m;
}

std::map<std::string, std::string> mcf_gold_map(std::span<const BenchmarkItem> items,
                                                std::span<const std::string> letters, const PromptFormat& fmt) {
  std::map<std::string, std::string> m;
  for (const auto& item : items) {
    const std::span<const std::string> used = letters.first(std::min(letters.size(), item.choices.size()));
    put_gold(m, render_mcf_context(item, used, fmt), fmt.continuation_prefix + letters[item.gold_index]);
  }
  return m;
}

std::map<std::string, std::string> tf_gold_map(std::span<const BenchmarkItem> items, const PromptFormat& fmt) {
  std::map<std::string, std::string> m;
  for (const auto& item : items)
    put_gold(m, render_tf_query(item, fmt), fmt.continuation_prefix + item.choices.at(item.gold_index));
  return m;
}

DiffRow diff_row(std::string model, const EvalResult& cf, const EvalResult& mcf) {
  return DiffRow{std::move(model), cf.overall, mcf.overall, cf.overall - mcf.overall};
}

std::string diff_csv(std::span<const DiffRow> rows) {
  std::string out = "model,cf,mcf,diff\n";
  for (const auto& r : rows) {
    out += r.model + "," + text::format_double(r.cf) + "," + text::format_double(r.mcf) + "," +
           text::format_double(r.diff) + "\n";
  }
  return out;
}

}  // namespace lmdata::eval
