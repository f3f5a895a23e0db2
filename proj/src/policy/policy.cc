#include "pikl/policy/policy.h"

#include <bit>
#include <cmath>

#include "pikl/errors.h"

namespace pikl::policy {

void Policy::BatchProbs(std::span<const Observation* const> obs, std::optional<double> lambda,
                        std::vector<ActionProbs>* out) const {
  out->resize(obs.size());
  for (size_t i = 0; i < obs.size(); ++i) {
    (*out)[i] = Probs(AohView(obs[i], 1), lambda);
  }
}

ActionProbs UniformOverMask(int num_actions, uint64_t legal_mask) {
  ActionProbs p(num_actions, 0.0);
  const int n = std::popcount(legal_mask);
  if (n == 0) return p;
  for (int i = 0; i < num_actions; ++i) {
    if ((legal_mask >> i) & 1ULL) p[i] = 1.0 / n;
  }
  return p;
}

ActionProbs UniformPolicy::Probs(AohView aoh, std::optional<double>) const {
  return UniformOverMask(config_.NumActions(), aoh.back().legal_mask);
}

int Argmax(std::span<const double> values) {
  int best = 0;
  for (size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = static_cast<int>(i);
  }
  return best;
}

int MaskedArgmax(std::span<const double> values, uint64_t legal_mask) {
  int best = -1;
  for (size_t i = 0; i < values.size(); ++i) {
    if (!((legal_mask >> i) & 1ULL)) continue;
    if (best < 0 || values[i] > values[best]) best = static_cast<int>(i);
  }
  if (best < 0) throw UsageError("argmax over an empty legal set");
  return best;
}

int SampleIndex(std::span<const double> probs, Rng& rng) {
  const size_t i = rng.Categorical(probs);
  if (i == probs.size()) throw UsageError("cannot sample from an all-zero distribution");
  return static_cast<int>(i);
}

hanabi::Action ChooseAction(const Policy& policy, AohView aoh, std::optional<double> lambda,
                            bool greedy, Rng& rng) {
  const ActionProbs p = policy.Probs(aoh, lambda);
  const uint64_t mask = aoh.back().legal_mask;
  const int a = greedy ? MaskedArgmax(p, mask) : SampleIndex(p, rng);
  return hanabi::Action::FromIndex(*aoh.back().config, a);
}

void CheckDistribution(std::span<const double> probs, uint64_t legal_mask, double tol) {
  double total = 0.0;
  for (size_t i = 0; i < probs.size(); ++i) {
    const bool legal = (legal_mask >> i) & 1ULL;
    if (!legal && probs[i] != 0.0) {
      throw UsageError("illegal action " + std::to_string(i) + " has nonzero probability");
    }
    if (!(probs[i] >= 0.0)) throw UsageError("negative or NaN probability");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > tol) {
    throw UsageError("probabilities sum to " + std::to_string(total));
  }
}

}  // namespace pikl::policy
