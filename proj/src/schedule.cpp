#include "lmdata/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace lmdata::schedule {

Composition parse_composition(std::string_view name) {
  if (name == "min") return Composition::min;
  if (name == "product") return Composition::product;
  if (name == "cosine" || name == "cosine-only") return Composition::cosine_only;
  if (name == "invsqrt" || name == "invsqrt-only") return Composition::invsqrt_only;
  throw std::invalid_argument("unknown composition: " + std::string(name));
}

std::string_view to_string(Composition c) {
  switch (c) {
    case Composition::min:
      return "min";
    case Composition::product:
      return "product";
    case Composition::cosine_only:
      return "cosine";
    case Composition::invsqrt_only:
      return "invsqrt";
  }
  return "min";
}

ScheduleSpec ScheduleSpec::early() { return ScheduleSpec{}; }

ScheduleSpec ScheduleSpec::late() {
  ScheduleSpec s;
  s.cooldown_start = s.total_steps - 10000;
  return s;
}

void ScheduleSpec::validate() const {
  if (!(warmup_steps > 0 && warmup_steps < cooldown_start && cooldown_start <= total_steps)) {
    throw std::invalid_argument("schedule requires 0 < warmup_steps < cooldown_start <= total_steps");
  }
  if (!(min_lr > 0.0 && min_lr < max_lr)) throw std::invalid_argument("schedule requires 0 < min_lr < max_lr");
}

double cosine_term(std::uint64_t step, const ScheduleSpec& spec) {
  const double span = static_cast<double>(spec.total_steps - spec.warmup_steps);
  const double progress = (static_cast<double>(step) - static_cast<double>(spec.warmup_steps)) / span;
  return spec.min_lr + 0.5 * (spec.max_lr - spec.min_lr) * (1.0 + std::cos(std::numbers::pi * progress));
}

double invsqrt_term(std::uint64_t step, const ScheduleSpec& spec) {
  return spec.max_lr * std::sqrt(static_cast<double>(spec.warmup_steps) / static_cast<double>(step));
}

double main_phase(std::uint64_t step, const ScheduleSpec& spec) {
  switch (spec.composition) {
    case Composition::min:
      return std::min(cosine_term(step, spec), invsqrt_term(step, spec));
    case Composition::product:
      return cosine_term(step, spec) * std::sqrt(static_cast<double>(spec.warmup_steps) / static_cast<double>(step));
    case Composition::cosine_only:
      return cosine_term(step, spec);
    case Composition::invsqrt_only:
      return invsqrt_term(step, spec);
  }
  return cosine_term(step, spec);
}

double lr_at(std::uint64_t step, const ScheduleSpec& spec) {
  if (step > spec.total_steps) {
    throw StepOutOfRange("step " + std::to_string(step) + " beyond total_steps " + std::to_string(spec.total_steps));
  }
  if (step < spec.warmup_steps) {
    return spec.max_lr * static_cast<double>(step) / static_cast<double>(spec.warmup_steps);
  }
  if (step < spec.cooldown_start) return main_phase(step, spec);
  if (spec.cooldown_start == spec.total_steps) return spec.min_lr;
  const double anchor = main_phase(spec.cooldown_start, spec);
  const double t = static_cast<double>(step - spec.cooldown_start) /
                   static_cast<double>(spec.total_steps - spec.cooldown_start);
  // std::lerp is exact at t == 1, so the last step lands on min_lr.
  return std::lerp(anchor, spec.min_lr, t);
}

std::vector<std::pair<std::uint64_t, double>> emit_curve(const ScheduleSpec& spec, std::uint64_t stride) {
  if (stride == 0) throw std::invalid_argument("stride must be >= 1");
  std::vector<std::pair<std::uint64_t, double>> out;
  out.reserve(spec.total_steps / stride + 2);
  for (std::uint64_t s = 0; s < spec.total_steps; s += stride) out.emplace_back(s, lr_at(s, spec));
  out.emplace_back(spec.total_steps, lr_at(spec.total_steps, spec));
  return out;
}

std::uint64_t batch_tokens(const BatchGeometry& geom) { return geom.sequences() * geom.seq_len; }

std::uint64_t training_tokens(const ScheduleSpec& spec, const BatchGeometry& geom) {
  return spec.total_steps * batch_tokens(geom);
}

}  // namespace lmdata::schedule
