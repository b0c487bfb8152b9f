#include "lmdata/mixture.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lmdata/text.hpp"

namespace lmdata::mixture {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 3> kLanguageNames = {"arabic", "english", "other"};

constexpr double kFractionTolerance = 1e-9;

}  // namespace

std::string_view to_string(Language l) { return kLanguageNames[static_cast<std::size_t>(l)]; }

Language parse_language(std::string_view name) {
  for (std::size_t i = 0; i < kLanguageNames.size(); ++i) {
    if (kLanguageNames[i] == name) return static_cast<Language>(i);
  }
  throw MixtureError("unknown language: " + std::string(name));
}

std::map<Language, double> sampling_percentages(const std::map<Language, double>& upweights,
                                                const std::map<Language, std::uint64_t>& groups) {
  if (groups.empty()) throw MixtureError("no groups to sample from");
  for (const auto& [lang, w] : upweights) {
    if (!groups.count(lang)) throw MixtureError("upweight for absent group: " + std::string(to_string(lang)));
    if (!(w > 0.0) || !std::isfinite(w)) throw MixtureError("upweights must be positive and finite");
  }
  double sum = 0.0;
  std::map<Language, double> out;
  for (const auto& [lang, tokens] : groups) {
    auto it = upweights.find(lang);
    const double w = it == upweights.end() ? 1.0 : it->second;
    out[lang] = w;
    sum += w;
  }
  for (auto& [lang, f] : out) f /= sum;
  return out;
}

std::map<Language, std::uint64_t> group_tokens(const std::vector<SourceStats>& sources) {
  std::map<Language, std::uint64_t> out;
  for (const auto& s : sources) out[s.language] += s.tokens;
  return out;
}

std::map<Language, double> token_shares(const std::vector<SourceStats>& sources) {
  if (sources.empty()) throw MixtureError("no sources");
  const auto groups = group_tokens(sources);
  std::uint64_t total = 0;
  for (const auto& [lang, t] : groups) total += t;
  if (total == 0) throw MixtureError("sources hold no tokens");
  std::map<Language, double> out;
  for (const auto& [lang, t] : groups) out[lang] = static_cast<double>(t) / static_cast<double>(total);
  return out;
}

std::map<std::string, double> source_fractions(const std::vector<SourceStats>& sources,
                                               const std::map<Language, double>& language_fractions) {
  const auto groups = group_tokens(sources);
  std::map<std::string, double> out;
  for (const auto& s : sources) {
    auto it = language_fractions.find(s.language);
    const double lf = it == language_fractions.end() ? 0.0 : it->second;
    const std::uint64_t g = groups.at(s.language);
    out[s.name] = g == 0 ? 0.0 : lf * static_cast<double>(s.tokens) / static_cast<double>(g);
  }
  return out;
}

double suggested_upweight(double fertility_target, double fertility_reference) {
  if (!(fertility_target > 0.0) || !(fertility_reference > 0.0)) {
    throw MixtureError("fertilities must be positive");
  }
  return fertility_target / fertility_reference;
}

MixturePlan plan_mixture(const std::vector<SourceStats>& sources,
                         const std::map<std::string, double>& fractions, std::uint64_t total_tokens,
                         std::uint64_t seed) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (!index.emplace(sources[i].name, i).second) throw MixtureError("duplicate source: " + sources[i].name);
    if (sources[i].tokens == 0) throw MixtureError("source has no tokens: " + sources[i].name);
  }
  double sum = 0.0;
  for (const auto& [name, f] : fractions) {
    if (!index.count(name)) throw MixtureError("fraction for unknown source: " + name);
    if (!(f >= 0.0)) throw MixtureError("negative fraction for " + name);
    sum += f;
  }
  if (std::abs(sum - 1.0) > kFractionTolerance) {
    throw MixtureError("fractions sum to " + text::format_double(sum) + ", expected 1");
  }

  MixturePlan plan;
  plan.total_tokens = total_tokens;
  plan.seed = seed;
  plan.sources.reserve(sources.size());

  // Largest remainder: floor every exact quota, then hand the leftover
  // tokens to the largest fractional parts (ties to the earlier source).
  std::vector<long double> remainders(sources.size());
  std::uint64_t assigned = 0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& s = sources[i];
    SourcePlan sp;
    sp.name = s.name;
    sp.language = s.language;
    sp.tokens = s.tokens;
    auto it = fractions.find(s.name);
    sp.sampling_fraction = it == fractions.end() ? 0.0 : it->second;
    const long double exact = static_cast<long double>(sp.sampling_fraction) / static_cast<long double>(sum) *
                              static_cast<long double>(total_tokens);
    const long double fl = std::floor(exact);
    sp.token_quota = static_cast<std::uint64_t>(fl);
    remainders[i] = exact - fl;
    assigned += sp.token_quota;
    plan.sources.push_back(std::move(sp));
  }
  std::uint64_t leftover = total_tokens >= assigned ? total_tokens - assigned : 0;
  std::vector<std::size_t> order(sources.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; leftover > 0 && !order.empty(); k = (k + 1) % order.size()) {
    // Only sources with a positive fraction can absorb rounding tokens.
    if (plan.sources[order[k]].sampling_fraction > 0.0) {
      ++plan.sources[order[k]].token_quota;
      --leftover;
    }
  }
  for (auto& sp : plan.sources) {
    sp.epochs = static_cast<double>(sp.token_quota) / static_cast<double>(sp.tokens);
  }
  return plan;
}

json to_json(const MixturePlan& plan) {
  json sources = json::array();
  for (const auto& s : plan.sources) {
    sources.push_back({{"name", s.name},
                       {"language", to_string(s.language)},
                       {"tokens", s.tokens},
                       {"sampling_fraction", s.sampling_fraction},
                       {"token_quota", s.token_quota},
                       {"epochs", s.epochs}});
  }
  return {{"total_tokens", plan.total_tokens}, {"seed", plan.seed}, {"sources", sources}};
}

namespace {

std::string pct1(double fraction) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(1);
  os << 100.0 * fraction;
  return os.str();
}

}  // namespace

std::string group_table_csv(const std::vector<SourceStats>& sources, const std::map<Language, double>& sampling) {
  const auto groups = group_tokens(sources);
  const auto shares = token_shares(sources);
  std::ostringstream os;
  os << "language,tokens,token_pct,sampling_pct\n";
  std::uint64_t total = 0;
  double sampling_total = 0.0;
  for (const auto& [lang, t] : groups) {
    auto it = sampling.find(lang);
    const double sf = it == sampling.end() ? 0.0 : it->second;
    os << to_string(lang) << ',' << t << ',' << pct1(shares.at(lang)) << ',' << pct1(sf) << '\n';
    total += t;
    sampling_total += sf;
  }
  os << "total," << total << ',' << pct1(1.0) << ',' << pct1(sampling_total) << '\n';
  return os.str();
}

std::string plan_csv(const MixturePlan& plan) {
  std::ostringstream os;
  os << "source,language,tokens,sampling_fraction,token_quota,epochs\n";
  for (const auto& s : plan.sources) {
    os << s.name << ',' << to_string(s.language) << ',' << s.tokens << ','
       << text::format_double(s.sampling_fraction) << ',' << s.token_quota << ',' << text::format_double(s.epochs)
       << '\n';
  }
  return os.str();
}

std::vector<SourceStats> sources_from_json(const json& j) {
  const json& arr = j.is_object() && j.contains("sources") ? j.at("sources") : j;
  if (!arr.is_array()) throw MixtureError("sources must be a JSON array");
  std::vector<SourceStats> out;
  try {
    for (const auto& e : arr) {
      SourceStats s;
      s.name = e.at("name").get<std::string>();
      const json& t = e.at("tokens");
      // Accept 6.19e11 style numbers as well as integers.
      s.tokens = t.is_number_float() ? static_cast<std::uint64_t>(std::llround(t.get<double>()))
                                     : t.get<std::uint64_t>();
      s.language = parse_language(e.value("language", std::string("other")));
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw MixtureError(std::string("malformed sources: ") + e.what());
  }
  if (out.empty()) throw MixtureError("no sources");
  return out;
}

// ---------------------------------------------------------------------------

bool VectorStream::next(corpus::Document& out) {
  if (pos_ >= docs_.size()) return false;
  out = docs_[pos_++];
  return true;
}

bool VectorStream::restart() {
  if (!restartable_) return false;
  pos_ = 0;
  return true;
}

MixtureSampler::MixtureSampler(const MixturePlan& plan, std::map<std::string, DocumentStream*> streams,
                               const tokenization::TokenizerAdapter& tok)
    : tok_(tok), rng_state_(text::mix64(plan.seed)) {
  for (const auto& s : plan.sources) {
    if (s.token_quota == 0) continue;
    auto it = streams.find(s.name);
    if (it == streams.end() || it->second == nullptr) throw MixtureError("no stream for source: " + s.name);
    slots_.push_back({s.name, s.token_quota, it->second});
    realized_[s.name] = 0;
  }
}

bool MixtureSampler::next(corpus::Document& out, std::string* source_name) {
  std::uint64_t remaining_total = 0;
  for (const auto& s : slots_) {
    const std::uint64_t got = realized_[s.name];
    if (got < s.quota) remaining_total += s.quota - got;
  }
  if (remaining_total == 0) return false;

  rng_state_ += 0x9e3779b97f4a7c15ULL;
  std::uint64_t draw = text::mix64(rng_state_) % remaining_total;
  Slot* chosen = nullptr;
  for (auto& s : slots_) {
    const std::uint64_t got = realized_[s.name];
    if (got >= s.quota) continue;
    const std::uint64_t rem = s.quota - got;
    if (draw < rem) {
      chosen = &s;
      break;
    }
    draw -= rem;
  }

  if (!chosen->stream->next(out)) {
    if (!chosen->stream->restart()) {
      throw StreamExhaustedError("stream exhausted before quota: " + chosen->name);
    }
    if (!chosen->stream->next(out)) throw StreamExhaustedError("empty stream: " + chosen->name);
  }
  const std::size_t tokens = tok_.count_tokens(out.text);
  // A zero-token document still advances the cursor; a stream made only of
  // such documents would never meet its quota.
  realized_[chosen->name] += std::max<std::size_t>(tokens, 1);
  if (source_name) *source_name = chosen->name;
  return true;
}

std::vector<corpus::Document> sample_stream(const MixturePlan& plan, std::map<std::string, DocumentStream*> streams,
                                            const tokenization::TokenizerAdapter& tok) {
  MixtureSampler sampler(plan, std::move(streams), tok);
  std::vector<corpus::Document> out;
  corpus::Document doc;
  while (sampler.next(doc)) out.push_back(doc);
  return out;
}

}  // namespace lmdata::mixture
