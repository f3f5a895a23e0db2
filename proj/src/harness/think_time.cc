#include "pikl/harness/think_time.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pikl/errors.h"

namespace pikl::harness {

void ThinkTimeConfig::Validate() const {
  if (!(scale >= 0.0) || !(min_t >= 0.0) || !(max_t >= min_t)) {
    throw ConfigError("think time needs scale >= 0 and 0 <= min_t <= max_t");
  }
  if (!(jitter >= 0.0 && jitter < 1.0)) throw ConfigError("think time jitter must be in [0, 1)");
}

nlohmann::json ThinkTimeConfig::ToJson() const {
  return {{"scale", scale}, {"min_t", min_t}, {"max_t", max_t}, {"jitter", jitter}};
}

ThinkTimeConfig ThinkTimeConfig::FromJson(const nlohmann::json& j) {
  ThinkTimeConfig c;
  c.scale = j.value("scale", c.scale);
  c.min_t = j.value("min_t", c.min_t);
  c.max_t = j.value("max_t", c.max_t);
  c.jitter = j.value("jitter", c.jitter);
  c.Validate();
  return c;
}

double SoftmaxEntropy(std::span<const double> q) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : q) {
    if (std::isfinite(v)) hi = std::max(hi, v);
  }
  if (!std::isfinite(hi)) throw UsageError("think time needs at least one legal action");
  double z = 0.0, zq = 0.0;
  for (double v : q) {
    if (!std::isfinite(v)) continue;
    const double w = std::exp(v - hi);
    z += w;
    zq += w * (v - hi);
  }
  // H = log Z - E[q - hi]
  return std::max(0.0, std::log(z) - zq / z);
}

double ThinkTime(std::span<const double> q, const ThinkTimeConfig& config, Rng* rng) {
  double t = config.scale * SoftmaxEntropy(q);
  if (rng != nullptr && config.jitter > 0.0) t *= 1.0 + rng->Uniform(-config.jitter, config.jitter);
  return std::clamp(t, config.min_t, config.max_t);
}

}  // namespace pikl::harness
