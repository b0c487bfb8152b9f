#pragma once

#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

namespace lmdata::schedule {

/// How the cosine decay and the inverse-square-root envelope are combined
/// in the main phase.
enum class Composition { min, product, cosine_only, invsqrt_only };

Composition parse_composition(std::string_view name);
std::string_view to_string(Composition c);

/// Recorded alongside a schedule; nothing here consumes it.
struct OptimizerMeta {
  double beta1 = 0.9;
  double beta2 = 0.95;
  double epsilon = 1e-8;
  double weight_decay = 0.1;
};

/// Warmup, then a cosine / inverse-sqrt main phase, then a linear cooldown
/// to min_lr that starts at cooldown_start.
struct ScheduleSpec {
  std::uint64_t total_steps = 500000;
  std::uint64_t warmup_steps = 10000;
  std::uint64_t cooldown_start = 300000;
  double max_lr = 5e-4;
  double min_lr = 2.5e-6;
  Composition composition = Composition::min;
  OptimizerMeta optimizer;

  /// Cooldown over the last 200k steps.
  static ScheduleSpec early();
  /// Cooldown over the last 10k steps.
  static ScheduleSpec late();

  /// Throws std::invalid_argument unless
  /// 0 < warmup < cooldown_start <= total and 0 < min_lr < max_lr.
  void validate() const;
};

class StepOutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Cosine decay from max_lr at the end of warmup to min_lr at total_steps.
double cosine_term(std::uint64_t step, const ScheduleSpec& spec);
/// max_lr * sqrt(warmup / step).
double invsqrt_term(std::uint64_t step, const ScheduleSpec& spec);
/// Main-phase value at `step` (no warmup or cooldown applied).
double main_phase(std::uint64_t step, const ScheduleSpec& spec);

/// Throws StepOutOfRange for step > total_steps.
double lr_at(std::uint64_t step, const ScheduleSpec& spec);

/// Samples 0, stride, 2*stride, ... and always total_steps.
std::vector<std::pair<std::uint64_t, double>> emit_curve(const ScheduleSpec& spec, std::uint64_t stride);

struct BatchGeometry {
  std::uint64_t micro_batch = 6;
  std::uint64_t nodes = 2;
  std::uint64_t gpus_per_node = 8;
  std::uint64_t seq_len = 4096;

  std::uint64_t sequences() const { return micro_batch * nodes * gpus_per_node; }
};

std::uint64_t batch_tokens(const BatchGeometry& geom);
std::uint64_t training_tokens(const ScheduleSpec& spec, const BatchGeometry& geom);

}  // namespace lmdata::schedule
