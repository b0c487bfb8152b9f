#include "lmdata/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "lmdata/corpus.hpp"
#include "lmdata/eval.hpp"
#include "lmdata/filters.hpp"
#include "lmdata/instruct.hpp"
#include "lmdata/mixture.hpp"
#include "lmdata/schedule.hpp"
#include "lmdata/text.hpp"
#include "lmdata/tokenization.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace lmdata::cli {

using nlohmann::json;

namespace {

/// Bad invocation: unreadable input, invalid config. Exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = kDefaultSeed;
  int parallelism = 0;
  std::string config;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const std::string& path) {
  const std::string body = read_file(path);
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded()) throw UsageError("invalid JSON in " + path);
  return j;
}

// "-" writes to `out`; an empty path writes nothing.
void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path.empty()) return;
  if (path == "-") {
    out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw UsageError("cannot write " + path);
  f << content;
  if (!f) throw UsageError("write failed: " + path);
}

// Sub-object named `section` when present, otherwise the whole document.
json config_section(const std::string& path, const std::string& section) {
  if (path.empty()) return json::object();
  json j = read_json(path);
  if (!j.is_object()) throw UsageError("config must be a JSON object: " + path);
  if (auto it = j.find(section); it != j.end()) return *it;
  return j;
}

std::vector<corpus::Document> read_documents(const std::string& path, std::size_t* rejects = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  auto result = corpus::ingest_jsonl(in);
  if (rejects) *rejects += result.rejects.size();
  return std::move(result.documents);
}

std::unique_ptr<tokenization::TokenizerAdapter> tokenizer_from(const std::string& spec) {
  try {
    return tokenization::make_tokenizer(spec);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

void add_common(CLI::App* app, Common& c) {
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
  app->add_option("--parallelism", c.parallelism, "Worker threads (0 = runtime default)")
      ->envname("LMDATA_PARALLELISM")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--config", c.config, "JSON config file")->envname("LMDATA_CONFIG");
}

// ---------------------------------------------------------------------------
// clean

struct CleanArgs {
  std::string in;
  std::string out;
  std::string report = "-";
  std::string table;
  std::string rejects;
  std::string tokenizer = "identity";
  std::size_t batch = 10000;
};

int run_clean(const CleanArgs& a, const Common& c, std::ostream& out) {
  filters::Pipeline pipe = [&] {
    try {
      return filters::pipeline_from_json(config_section(c.config, "clean"));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError(std::string("invalid cleaning config: ") + e.what());
    }
  }();
  const auto tok = tokenizer_from(a.tokenizer);

  std::ifstream in(a.in, std::ios::binary);
  if (!in) throw UsageError("cannot read " + a.in);
  std::ofstream kept_out;
  if (!a.out.empty()) {
    kept_out.open(a.out, std::ios::binary | std::ios::trunc);
    if (!kept_out) throw UsageError("cannot write " + a.out);
  }
  std::string reject_lines;
  corpus::JsonlReader reader(in, [&](const corpus::Reject& r) { reject_lines += corpus::to_jsonl(r) + "\n"; });

  auto report = filters::CleaningReport::empty(tok->name());
  std::size_t docs = 0;
  std::size_t kept = 0;
  std::vector<corpus::Document> batch;
  auto flush = [&] {
    if (batch.empty()) return;
    auto result = filters::run_pipeline(batch, pipe, *tok);
    report = filters::merge_reports(report, result.report);
    for (const auto& d : result.kept) {
      if (kept_out.is_open()) kept_out << corpus::to_jsonl(d) << '\n';
    }
    docs += batch.size();
    kept += result.kept.size();
    batch.clear();
  };
  corpus::Document doc;
  while (reader.next(doc)) {
    batch.push_back(std::move(doc));
    if (batch.size() >= std::max<std::size_t>(a.batch, 1)) flush();
  }
  flush();

  write_output(a.report, filters::to_json(report).dump(2) + "\n", out);
  write_output(a.table, filters::to_table_csv(report), out);
  write_output(a.rejects, reject_lines, out);
  if (a.report != "-") {
    out << json{{"documents", docs}, {"kept", kept}, {"ingest_rejects", reader.rejected()}}.dump() << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// fertility

struct FertilityArgs {
  std::vector<std::string> in;
  std::vector<std::string> tokenizers = {"identity"};
  std::string averaging = "micro";
  std::string out = "-";
  bool json_output = false;
};

int run_fertility(const FertilityArgs& a, const Common&, std::ostream& out) {
  tokenization::Averaging avg;
  if (a.averaging == "micro") {
    avg = tokenization::Averaging::micro;
  } else if (a.averaging == "macro") {
    avg = tokenization::Averaging::macro;
  } else {
    throw UsageError("--averaging must be micro or macro");
  }
  std::vector<corpus::Document> docs;
  for (const auto& path : a.in) {
    auto part = read_documents(path);
    docs.insert(docs.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  json rows = json::array();
  std::string csv = "tokenizer,documents,words,tokens,fertility\n";
  for (const auto& spec : a.tokenizers) {
    const auto tok = tokenizer_from(spec);
    const auto r = tokenization::fertility(docs, *tok, avg);
    rows.push_back({{"tokenizer", r.tokenizer_name},
                    {"documents", r.documents},
                    {"words", r.total_words},
                    {"tokens", r.total_tokens},
                    {"averaging", a.averaging},
                    {"fertility", r.fertility}});
    csv += r.tokenizer_name + "," + std::to_string(r.documents) + "," + std::to_string(r.total_words) + "," +
           std::to_string(r.total_tokens) + "," + text::format_double(r.fertility) + "\n";
  }
  write_output(a.out, a.json_output ? rows.dump(2) + "\n" : csv, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// mix-plan

struct MixArgs {
  std::string sources;
  std::vector<std::string> upweights;
  double total_tokens = 0.0;
  std::string out = "-";
  std::string table;
  std::string plan_csv;
};

int run_mix_plan(const MixArgs& a, const Common& c, std::ostream& out) {
  std::vector<mixture::SourceStats> sources;
  try {
    sources = mixture::sources_from_json(read_json(a.sources));
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid sources file: ") + e.what());
  }
  std::map<mixture::Language, double> weights;
  for (const auto& spec : a.upweights) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) throw UsageError("--upweight expects language=factor, got " + spec);
    try {
      weights[mixture::parse_language(spec.substr(0, eq))] = std::stod(spec.substr(eq + 1));
    } catch (const std::exception& e) {
      throw UsageError("bad --upweight " + spec + ": " + e.what());
    }
  }
  const auto groups = mixture::group_tokens(sources);
  const auto sampling = mixture::sampling_percentages(weights, groups);
  const auto fractions = mixture::source_fractions(sources, sampling);
  std::uint64_t total = 0;
  for (const auto& [lang, n] : groups) total += n;
  if (a.total_tokens > 0.0) total = static_cast<std::uint64_t>(a.total_tokens);
  const auto plan = mixture::plan_mixture(sources, fractions, total, c.seed);

  json j = mixture::to_json(plan);
  json shares = json::object();
  for (const auto& [lang, share] : mixture::token_shares(sources)) shares[std::string(mixture::to_string(lang))] = share;
  json samp = json::object();
  for (const auto& [lang, f] : sampling) samp[std::string(mixture::to_string(lang))] = f;
  j["token_shares"] = shares;
  j["sampling_percentages"] = samp;
  write_output(a.out, j.dump(2) + "\n", out);
  write_output(a.table, mixture::group_table_csv(sources, sampling), out);
  write_output(a.plan_csv, mixture::plan_csv(plan), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// lr-curve

struct CurveArgs {
  std::string variant = "early";
  std::string composition = "min";
  std::uint64_t stride = 1000;
  std::optional<std::uint64_t> total_steps;
  std::optional<std::uint64_t> warmup;
  std::optional<std::uint64_t> cooldown_start;
  std::optional<double> max_lr;
  std::optional<double> min_lr;
  bool no_header = false;
  std::string out = "-";
};

int run_lr_curve(const CurveArgs& a, const Common&, std::ostream& out) {
  schedule::ScheduleSpec spec;
  if (a.variant == "early") {
    spec = schedule::ScheduleSpec::early();
  } else if (a.variant == "late") {
    spec = schedule::ScheduleSpec::late();
  } else {
    throw UsageError("--variant must be early or late");
  }
  try {
    spec.composition = schedule::parse_composition(a.composition);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  if (a.total_steps) {
    const std::uint64_t tail = spec.total_steps - spec.cooldown_start;
    spec.total_steps = *a.total_steps;
    if (a.variant == "late" && !a.cooldown_start && spec.total_steps >= tail) spec.cooldown_start = spec.total_steps - tail;
  }
  if (a.warmup) spec.warmup_steps = *a.warmup;
  if (a.cooldown_start) spec.cooldown_start = *a.cooldown_start;
  if (a.max_lr) spec.max_lr = *a.max_lr;
  if (a.min_lr) spec.min_lr = *a.min_lr;
  spec.validate();
  if (a.stride == 0) throw UsageError("--stride must be >= 1");

  std::string csv = a.no_header ? "" : "step,lr\n";
  for (const auto& [step, lr] : schedule::emit_curve(spec, a.stride)) {
    csv += std::to_string(step) + "," + text::format_double(lr) + "\n";
  }
  write_output(a.out, csv, out);
  return kOk;
}

// ---------------------------------------------------------------------------
// instruct

struct InstructBuildArgs {
  std::string in;
  std::string out = "-";
  std::string stats;
  std::string report;
  std::optional<std::size_t> max_chars;
  std::optional<double> mcq_fraction;
  std::optional<double> malformed_rate;
};

std::array<double, 4> weights_from(const json& j) {
  auto v = j.get<std::vector<double>>();
  if (v.size() != 4) throw std::invalid_argument("expected four weights");
  return {v[0], v[1], v[2], v[3]};
}

int run_instruct_build(const InstructBuildArgs& a, const Common& c, std::ostream& out) {
  instruct::FactoryConfig cfg;
  instruct::MockGeneratorConfig gen_cfg;
  cfg.seed = c.seed;
  try {
    const json j = config_section(c.config, "instruct");
    for (const auto& [key, value] : j.items()) {
      if (key == "max_chars") {
        cfg.max_chars = value.get<std::size_t>();
      } else if (key == "mcq_fraction") {
        cfg.mcq_fraction = value.get<double>();
      } else if (key == "style_weights") {
        cfg.style_weights = weights_from(value);
      } else if (key == "malformed_rate") {
        gen_cfg.malformed_rate = value.get<double>();
      } else if (key == "standard_pairs") {
        gen_cfg.standard_pairs = weights_from(value);
      } else if (key == "mcq_items") {
        gen_cfg.mcq_items = weights_from(value);
      } else if (key == "templates") {
        cfg.templates.version = value.value("version", cfg.templates.version);
        cfg.templates.standard = value.value("standard", cfg.templates.standard);
        cfg.templates.mcq = value.value("mcq", cfg.templates.mcq);
      } else {
        throw std::invalid_argument("unknown instruct config key: " + key);
      }
    }
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid instruct config: ") + e.what());
  }
  if (a.max_chars) cfg.max_chars = *a.max_chars;
  if (a.mcq_fraction) cfg.mcq_fraction = *a.mcq_fraction;
  if (a.malformed_rate) gen_cfg.malformed_rate = *a.malformed_rate;

  const auto docs = read_documents(a.in);
  const instruct::MockGenerator gen(gen_cfg);
  const auto result = instruct::build_synthetic(docs, gen, cfg);

  std::string jsonl;
  std::vector<instruct::Dialogue> dialogues;
  for (const auto& r : result.records) {
    jsonl += instruct::to_jsonl(r) + "\n";
    dialogues.push_back(r.dialogue);
  }
  write_output(a.out, jsonl, out);
  write_output(a.stats, instruct::to_json(instruct::dataset_stats(dialogues)).dump(2) + "\n", out);
  json report = instruct::to_json(result.report);
  report["prompts"] = result.prompts;
  report["generator"] = gen.name();
  report["templates_version"] = cfg.templates.version;
  write_output(a.report, report.dump(2) + "\n", out);
  return kOk;
}

struct InstructStatsArgs {
  std::vector<std::string> in;
  std::string out = "-";
  std::string origin;
};

// Reads ChatML records, or plain instruction datasets when --origin is set.
int run_instruct_stats(const InstructStatsArgs& a, const Common&, std::ostream& out) {
  std::vector<instruct::Dialogue> dialogues;
  instruct::FilterReport report;
  std::optional<instruct::Origin> origin;
  if (!a.origin.empty()) {
    try {
      origin = instruct::parse_origin(a.origin);
    } catch (const std::exception& e) {
      throw UsageError(e.what());
    }
  }
  for (const auto& path : a.in) {
    const std::string body = read_file(path);
    std::size_t line_no = 0;
    for (auto line : text::split_lines(body)) {
      ++line_no;
      if (text::trim(line).empty()) continue;
      if (origin) {
        json j = json::parse(line.begin(), line.end(), nullptr, false);
        instruct::Parsed<instruct::Dialogue> parsed =
            j.is_discarded() ? instruct::Parsed<instruct::Dialogue>(instruct::Rejection{
                                   instruct::RejectReason::unparseable, "line " + std::to_string(line_no)})
                             : instruct::dialogue_from_json(j, *origin);
        auto filtered = instruct::filter_dialogues({std::move(parsed)});
        report.input += filtered.report.input;
        report.kept += filtered.report.kept;
        for (const auto& [r, n] : filtered.report.rejected) report.rejected[r] += n;
        for (auto& d : filtered.kept) dialogues.push_back(std::move(d));
      } else {
        ++report.input;
        try {
          dialogues.push_back(instruct::record_from_jsonl(line).dialogue);
          ++report.kept;
        } catch (const instruct::ChatmlError& e) {
          ++report.rejected[e.reason()];
        }
      }
    }
  }
  json j = instruct::to_json(instruct::dataset_stats(dialogues));
  j["validation"] = instruct::to_json(report);
  write_output(a.out, j.dump(2) + "\n", out);
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string items;
  std::vector<std::string> scorers = {"ngram"};
  std::string ngram_corpus;
  std::string norm = "by_bytes";
  std::string letters = "A,B,C,D,E";
  std::string answer_cue;
  std::string out = "-";
  bool outcomes = false;
  // acva
  std::string pool;
  std::size_t shots = 5;
  std::string labels;
};

std::vector<std::string> split_csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

std::vector<eval::BenchmarkItem> load_items(const std::string& path) {
  const json j = read_json(path);
  try {
    return eval::items_from_json(j);
  } catch (const std::exception& e) {
    throw UsageError(std::string("invalid benchmark file: ") + e.what());
  }
}

eval::PromptFormat format_from(const EvalArgs& a) {
  eval::PromptFormat f;
  if (!a.answer_cue.empty()) f.answer_cue = a.answer_cue;
  return f;
}

enum class Task { cf, mcf, tf };

std::unique_ptr<eval::Scorer> make_scorer(const std::string& name, const EvalArgs& a,
                                          std::span<const eval::BenchmarkItem> items, Task task) {
  const auto fmt = format_from(a);
  if (name == "constant") return std::make_unique<eval::ConstantScorer>();
  if (name == "ngram") {
    if (a.ngram_corpus.empty()) return std::make_unique<eval::NgramScorer>(eval::NgramScorer::from_default_corpus());
    return std::make_unique<eval::NgramScorer>(eval::NgramScorer(read_file(a.ngram_corpus)));
  }
  if (name == "oracle" || name == "anti-oracle") {
    std::map<std::string, std::string> gold;
    switch (task) {
      case Task::cf:
        gold = eval::cf_gold_map(items, fmt);
        break;
      case Task::mcf: {
        const auto letters = split_csv_list(a.letters);
        gold = eval::mcf_gold_map(items, letters, fmt);
        break;
      }
      case Task::tf:
        gold = eval::tf_gold_map(items, fmt);
        break;
    }
    return std::make_unique<eval::OracleScorer>(std::move(gold), name == "anti-oracle");
  }
  throw UsageError("unknown scorer: " + name + " (constant, ngram, oracle, anti-oracle)");
}

eval::Norm norm_from(const std::string& s) {
  try {
    return eval::parse_norm(s);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

const std::string& single_scorer(const EvalArgs& a) {
  if (a.scorers.size() != 1) throw UsageError("this command takes exactly one --scorer");
  return a.scorers.front();
}

int run_eval_cf(const EvalArgs& a, const Common&, std::ostream& out) {
  const auto items = load_items(a.items);
  const auto scorer = make_scorer(single_scorer(a), a, items, Task::cf);
  eval::CfOptions opts;
  opts.norm = norm_from(a.norm);
  opts.format = format_from(a);
  const auto r = eval::evaluate_cf(items, *scorer, opts);
  json j = eval::to_json(r, a.outcomes);
  j["scorer"] = scorer->name();
  j["norm"] = eval::to_string(opts.norm);
  write_output(a.out, j.dump(2) + "\n", out);
  return kOk;
}

int run_eval_mcf(const EvalArgs& a, const Common&, std::ostream& out) {
  const auto items = load_items(a.items);
  const auto scorer = make_scorer(single_scorer(a), a, items, Task::mcf);
  eval::McfOptions opts;
  opts.letters = split_csv_list(a.letters);
  opts.format = format_from(a);
  const auto r = eval::evaluate_mcf(items, *scorer, opts);
  json j = eval::to_json(r, a.outcomes);
  j["scorer"] = scorer->name();
  write_output(a.out, j.dump(2) + "\n", out);
  return kOk;
}

int run_eval_acva(const EvalArgs& a, const Common& c, std::ostream& out) {
  const auto items = load_items(a.items);
  if (a.pool.empty()) throw UsageError("eval acva needs --pool");
  const auto pool = load_items(a.pool);
  const auto scorer = make_scorer(single_scorer(a), a, items, Task::tf);
  eval::TrueFalseOptions opts;
  opts.shots = a.shots;
  opts.seed = c.seed;
  opts.format = format_from(a);
  if (!a.labels.empty()) opts.labels = split_csv_list(a.labels);
  const auto r = eval::evaluate_true_false(items, pool, *scorer, opts);
  json j = eval::to_json(r, a.outcomes);
  j["scorer"] = scorer->name();
  j["shots"] = opts.shots;
  j["seed"] = opts.seed;
  write_output(a.out, j.dump(2) + "\n", out);
  return kOk;
}

int run_eval_diff(const EvalArgs& a, const Common&, std::ostream& out) {
  const auto items = load_items(a.items);
  std::vector<eval::DiffRow> rows;
  for (const auto& name : a.scorers) {
    const auto cf_scorer = make_scorer(name, a, items, Task::cf);
    const auto mcf_scorer = make_scorer(name, a, items, Task::mcf);
    eval::CfOptions cf;
    cf.norm = norm_from(a.norm);
    cf.format = format_from(a);
    eval::McfOptions mcf;
    mcf.letters = split_csv_list(a.letters);
    mcf.format = format_from(a);
    rows.push_back(eval::diff_row(name, eval::evaluate_cf(items, *cf_scorer, cf),
                                  eval::evaluate_mcf(items, *mcf_scorer, mcf)));
  }
  write_output(a.out, eval::diff_csv(rows), out);
  return kOk;
}

// ---------------------------------------------------------------------------
// report merge

struct MergeArgs {
  std::vector<std::string> in;
  std::string out = "-";
  std::string table;
};

int run_report_merge(const MergeArgs& a, const Common&, std::ostream& out) {
  std::optional<filters::CleaningReport> merged;
  for (const auto& path : a.in) {
    filters::CleaningReport r;
    try {
      r = filters::report_from_json(read_json(path));
    } catch (const UsageError&) {
      throw;
    } catch (const std::exception& e) {
      throw UsageError("invalid report " + path + ": " + e.what());
    }
    merged = merged ? filters::merge_reports(*merged, r) : r;
  }
  write_output(a.out, filters::to_json(*merged).dump(2) + "\n", out);
  write_output(a.table, filters::to_table_csv(*merged), out);
  return kOk;
}

void apply_parallelism(const Common& c) {
#ifdef _OPENMP
  if (c.parallelism > 0) omp_set_num_threads(c.parallelism);
#else
  (void)c;
#endif
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Arabic LM data tools: cleaning, fertility, mixtures, schedules, instruction data, evaluation",
               "lmdata"};
  app.require_subcommand(1);
  Common common;
  std::function<int()> action;

  CleanArgs clean;
  auto* c_clean = app.add_subcommand("clean", "Normalize, strip headers and filter a JSONL corpus");
  add_common(c_clean, common);
  c_clean->add_option("--in", clean.in, "Input documents (JSONL)")->required()->check(CLI::ExistingFile);
  c_clean->add_option("--out", clean.out, "Kept documents (JSONL)");
  c_clean->add_option("--report", clean.report, "Report JSON ('-' for stdout)")->capture_default_str();
  c_clean->add_option("--table", clean.table, "Per-source table CSV");
  c_clean->add_option("--rejects", clean.rejects, "Malformed input lines (JSONL)");
  c_clean->add_option("--tokenizer", clean.tokenizer, "identity, character or vocab:<path>")->capture_default_str();
  c_clean->add_option("--batch", clean.batch, "Documents per processing batch")->capture_default_str();
  c_clean->callback([&] { action = [&] { return run_clean(clean, common, out); }; });

  FertilityArgs fert;
  auto* c_fert = app.add_subcommand("fertility", "Tokens per word for one or more tokenizers");
  add_common(c_fert, common);
  c_fert->add_option("--in", fert.in, "Input documents (JSONL)")->required()->check(CLI::ExistingFile);
  c_fert->add_option("--tokenizer", fert.tokenizers, "identity, character or vocab:<path>; repeatable");
  c_fert->add_option("--averaging", fert.averaging, "micro or macro")->capture_default_str();
  c_fert->add_option("--out", fert.out, "Output path ('-' for stdout)")->capture_default_str();
  c_fert->add_flag("--json", fert.json_output, "JSON instead of CSV");
  c_fert->callback([&] { action = [&] { return run_fertility(fert, common, out); }; });

  MixArgs mix;
  auto* c_mix = app.add_subcommand("mix-plan", "Sampling fractions and token quotas for a data mixture");
  add_common(c_mix, common);
  c_mix->add_option("--sources", mix.sources, "Sources JSON")->required()->check(CLI::ExistingFile);
  c_mix->add_option("--upweight", mix.upweights, "language=factor; repeatable");
  c_mix->add_option("--total-tokens", mix.total_tokens, "Training budget (default: all tokens)");
  c_mix->add_option("--out", mix.out, "Plan JSON ('-' for stdout)")->capture_default_str();
  c_mix->add_option("--table", mix.table, "Language-level CSV");
  c_mix->add_option("--plan-csv", mix.plan_csv, "Per-source CSV");
  c_mix->callback([&] { action = [&] { return run_mix_plan(mix, common, out); }; });

  CurveArgs curve;
  auto* c_curve = app.add_subcommand("lr-curve", "Learning-rate schedule as CSV");
  add_common(c_curve, common);
  c_curve->add_option("--variant", curve.variant, "early or late cooldown")->capture_default_str();
  c_curve->add_option("--composition", curve.composition, "min, product, cosine or invsqrt")->capture_default_str();
  c_curve->add_option("--stride", curve.stride, "Step stride")->capture_default_str();
  c_curve->add_option("--total-steps", curve.total_steps);
  c_curve->add_option("--warmup", curve.warmup);
  c_curve->add_option("--cooldown-start", curve.cooldown_start);
  c_curve->add_option("--max-lr", curve.max_lr);
  c_curve->add_option("--min-lr", curve.min_lr);
  c_curve->add_flag("--no-header", curve.no_header, "Omit the step,lr header");
  c_curve->add_option("--out", curve.out, "Output path ('-' for stdout)")->capture_default_str();
  c_curve->callback([&] { action = [&] { return run_lr_curve(curve, common, out); }; });

  auto* c_instruct = app.add_subcommand("instruct", "Synthetic instruction data");
  c_instruct->require_subcommand(1);
  InstructBuildArgs ib;
  auto* c_ib = c_instruct->add_subcommand("build", "Rephrase cleaned documents into ChatML dialogues");
  add_common(c_ib, common);
  c_ib->add_option("--in", ib.in, "Cleaned documents (JSONL)")->required()->check(CLI::ExistingFile);
  c_ib->add_option("--out", ib.out, "ChatML records (JSONL)")->capture_default_str();
  c_ib->add_option("--stats", ib.stats, "Dataset statistics JSON");
  c_ib->add_option("--report", ib.report, "Filter report JSON");
  c_ib->add_option("--max-chars", ib.max_chars, "Chunk size in characters");
  c_ib->add_option("--mcq-fraction", ib.mcq_fraction, "Share of chunks using the MCQ template");
  c_ib->add_option("--malformed-rate", ib.malformed_rate, "Mock generator malformed response rate");
  c_ib->callback([&] { action = [&] { return run_instruct_build(ib, common, out); }; });

  InstructStatsArgs is;
  auto* c_is = c_instruct->add_subcommand("stats", "Turn and enumeration-style histograms");
  add_common(c_is, common);
  c_is->add_option("--in", is.in, "ChatML JSONL; repeatable")->required()->check(CLI::ExistingFile);
  c_is->add_option("--origin", is.origin, "Read from/value records with this origin instead of ChatML");
  c_is->add_option("--out", is.out, "Output path ('-' for stdout)")->capture_default_str();
  c_is->callback([&] { action = [&] { return run_instruct_stats(is, common, out); }; });

  auto* c_eval = app.add_subcommand("eval", "Benchmark evaluation with reference scorers");
  c_eval->require_subcommand(1);
  EvalArgs ev;
  auto add_eval = [&](const char* name, const char* desc, auto fn) {
    auto* sub = c_eval->add_subcommand(name, desc);
    add_common(sub, common);
    sub->add_option("--items", ev.items, "Benchmark items (JSON array)")->required()->check(CLI::ExistingFile);
    sub->add_option("--scorer", ev.scorers, "constant, ngram, oracle or anti-oracle")->capture_default_str();
    sub->add_option("--ngram-corpus", ev.ngram_corpus, "Training text for the n-gram scorer");
    sub->add_option("--answer-cue", ev.answer_cue, "Answer cue line");
    sub->add_option("--out", ev.out, "Output path ('-' for stdout)")->capture_default_str();
    sub->callback([&, fn] { action = [&, fn] { return fn(ev, common, out); }; });
    return sub;
  };
  auto* e_cf = add_eval("cf", "Cloze format", run_eval_cf);
  e_cf->add_option("--norm", ev.norm, "none, by_bytes or by_tokens")->capture_default_str();
  e_cf->add_flag("--outcomes", ev.outcomes, "Include per-item outcomes");
  auto* e_mcf = add_eval("mcf", "Multiple-choice format", run_eval_mcf);
  e_mcf->add_option("--letters", ev.letters, "Comma-separated option letters")->capture_default_str();
  e_mcf->add_flag("--outcomes", ev.outcomes, "Include per-item outcomes");
  auto* e_acva = add_eval("acva", "Few-shot true/false with F1 macro", run_eval_acva);
  e_acva->add_option("--pool", ev.pool, "Exemplar pool (JSON array)")->check(CLI::ExistingFile);
  e_acva->add_option("--shots", ev.shots, "Exemplars per prompt")->capture_default_str();
  e_acva->add_option("--labels", ev.labels, "True,False label strings");
  e_acva->add_flag("--outcomes", ev.outcomes, "Include per-item outcomes");
  auto* e_diff = add_eval("diff", "CF minus MCF accuracy per scorer (CSV)", run_eval_diff);
  e_diff->add_option("--norm", ev.norm, "CF normalization")->capture_default_str();
  e_diff->add_option("--letters", ev.letters, "Comma-separated option letters")->capture_default_str();

  auto* c_report = app.add_subcommand("report", "Cleaning report utilities");
  c_report->require_subcommand(1);
  MergeArgs merge;
  auto* c_merge = c_report->add_subcommand("merge", "Sum shard reports");
  add_common(c_merge, common);
  c_merge->add_option("inputs", merge.in, "Report JSON files")->required()->check(CLI::ExistingFile);
  c_merge->add_option("--out", merge.out, "Merged report ('-' for stdout)")->capture_default_str();
  c_merge->add_option("--table", merge.table, "Per-source table CSV");
  c_merge->callback([&] { action = [&] { return run_report_merge(merge, common, out); }; });

  if (args.empty()) {
    err << app.help();
    return kUsageError;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << e.what() << "\n";
    return kUsageError;
  }
  if (!action) {
    err << app.help();
    return kUsageError;
  }
  apply_parallelism(common);
  try {
    return action();
  } catch (const UsageError& e) {
    err << json{{"error", "usage"}, {"message", e.what()}}.dump() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << json{{"error", "validation"}, {"message", e.what()}}.dump() << "\n";
    return kValidationError;
  }
}

}  // namespace lmdata::cli
