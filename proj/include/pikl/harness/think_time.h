#ifndef PIKL_HARNESS_THINK_TIME_H_
#define PIKL_HARNESS_THINK_TIME_H_

#include <span>

#include "json.hpp"
#include "pikl/rng.h"

namespace pikl::harness {

struct ThinkTimeConfig {
  double scale = 4.0;  // seconds per nat
  double min_t = 0.5;
  double max_t = 8.0;
  double jitter = 0.1;  // relative, uniform in ±jitter

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  static ThinkTimeConfig FromJson(const nlohmann::json& j);
};

// Entropy (nats) of softmax over the finite entries of q; -inf entries are
// illegal actions. Throws UsageError when no entry is finite.
double SoftmaxEntropy(std::span<const double> q);

// clamp(scale * H * (1 + u), min_t, max_t) with u ~ U[-jitter, jitter], or
// u = 0 when rng is null.
double ThinkTime(std::span<const double> q, const ThinkTimeConfig& config, Rng* rng = nullptr);

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_THINK_TIME_H_
