#ifndef PIKL_POLICY_POLICY_H_
#define PIKL_POLICY_POLICY_H_

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pikl/hanabi/observation.h"
#include "pikl/rng.h"

namespace pikl::policy {

using hanabi::AohView;
using hanabi::Observation;

// Distribution over the canonical action indices of one config. Illegal
// entries are exactly 0 and the legal ones sum to 1.
using ActionProbs = std::vector<double>;

class Policy {
 public:
  virtual ~Policy() = default;

  virtual std::string Name() const = 0;
  virtual const hanabi::GameConfig& config() const = 0;

  // `aoh.back()` is the current observation and must be the owner's turn.
  // `lambda` is ignored by policies without a λ input.
  virtual ActionProbs Probs(AohView aoh, std::optional<double> lambda) const = 0;

  // Action values when the policy has them (Q-based policies).
  virtual std::optional<std::vector<double>> Values(AohView, std::optional<double>) const {
    return std::nullopt;
  }

  // True if Probs depends only on aoh.back(). Rollouts require this.
  virtual bool Markov() const { return true; }
  virtual bool LambdaConditioned() const { return false; }

  // Many current observations at once; Markov policies only. The default
  // evaluates one at a time.
  virtual void BatchProbs(std::span<const Observation* const> obs, std::optional<double> lambda,
                          std::vector<ActionProbs>* out) const;
};

using PolicyPtr = std::shared_ptr<const Policy>;

// Picks every legal action with equal probability.
class UniformPolicy : public Policy {
 public:
  explicit UniformPolicy(const hanabi::GameConfig& config) : config_(config) {}
  std::string Name() const override { return "uniform"; }
  const hanabi::GameConfig& config() const override { return config_; }
  ActionProbs Probs(AohView aoh, std::optional<double> lambda) const override;

 private:
  hanabi::GameConfig config_;
};

ActionProbs UniformOverMask(int num_actions, uint64_t legal_mask);

// Highest-probability action, ties to the lowest index.
int Argmax(std::span<const double> values);
// Argmax restricted to legal entries.
int MaskedArgmax(std::span<const double> values, uint64_t legal_mask);
int SampleIndex(std::span<const double> probs, Rng& rng);

// Greedy (argmax) or sampled action for the current observation.
hanabi::Action ChooseAction(const Policy& policy, AohView aoh, std::optional<double> lambda,
                            bool greedy, Rng& rng);

// Throws UsageError unless `probs` is a distribution over `legal_mask`
// within `tol`.
void CheckDistribution(std::span<const double> probs, uint64_t legal_mask, double tol = 1e-9);

}  // namespace pikl::policy

#endif  // PIKL_POLICY_POLICY_H_
