#ifndef PIKL_SEARCH_SEARCH_H_
#define PIKL_SEARCH_SEARCH_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "json.hpp"
#include "pikl/belief/belief.h"
#include "pikl/hanabi/observation.h"
#include "pikl/policy/policy.h"
#include "pikl/rng.h"

namespace pikl::search {

using hanabi::AohView;
using hanabi::Observation;

enum class ActMode { kSample, kGreedy };

struct SearchParams {
  double lambda = 1.0;
  int rollouts_M = 200;
  ActMode mode = ActMode::kGreedy;
  policy::PolicyPtr partner_model;
  policy::PolicyPtr rollout_policy;
  policy::PolicyPtr anchor_policy;
  // λ inputs handed to λ-conditioned networks (ignored by the rest).
  std::optional<double> partner_lambda;
  std::optional<double> rollout_lambda;
  std::optional<double> anchor_lambda;
  // Rollout policies act by argmax unless set.
  bool sample_rollouts = false;

  // Throws UsageError.
  void Validate(int num_legal) const;
};

struct QEstimate {
  std::vector<int> actions;  // legal canonical indices, ascending
  std::vector<double> mean;
  std::vector<double> stderr_of_mean;
  std::vector<int> count;
  int requested = 0;
  int shortfall = 0;  // rollouts lost to belief rejection

  int total() const;
  // Per canonical index; -inf for actions not estimated.
  std::vector<double> Dense(int num_actions) const;
};

// Monte-Carlo Q(τ, a) for every legal action: sample hands from the belief,
// rebuild the full state (unseen cards shuffled into the deck), force a and
// roll out to the end. Values are final-score deltas.
QEstimate EstimateQ(AohView aoh, const belief::BeliefModel& belief, const SearchParams& params,
                    Rng& rng);

// P(a) ∝ anchor(a) exp(Q(a)/λ), in log space. `q` and `anchor` are per
// canonical index. Throws UsageError when no legal action has both positive
// anchor mass and finite Q.
std::vector<double> PiklDistribution(std::span<const double> q, std::span<const double> anchor,
                                      double lambda, uint64_t legal_mask);

// argmax of λ log anchor(a) + Q(a), lowest index on ties.
int PiklGreedy(std::span<const double> q, std::span<const double> anchor, double lambda,
               uint64_t legal_mask);

struct Decision {
  int action = -1;
  QEstimate q;
  policy::ActionProbs anchor;
  std::vector<double> probs;  // Sample mode; one-hot in Greedy mode
  double wall_seconds = 0.0;

  nlohmann::json TraceJson(uint64_t aoh_hash, double lambda) const;
};

Decision PiklDecide(AohView aoh, const belief::BeliefModel& belief, const SearchParams& params,
                    Rng& rng);
hanabi::Action PiklAct(AohView aoh, const belief::BeliefModel& belief,
                       const SearchParams& params, Rng& rng);

// Hash of the whole AOH, used to seed per-decision streams.
uint64_t AohHash(AohView aoh);

// A policy that searches at each of its turns. Randomness comes from
// DeriveSeed(seed, AohHash(aoh)) so the same history gives the same answer.
class SearchPolicy : public policy::Policy {
 public:
  SearchPolicy(SearchParams params, belief::BeliefPtr belief, uint64_t seed,
               std::string name = "pikl-search");

  std::string Name() const override { return name_; }
  const hanabi::GameConfig& config() const override;
  // Greedy: one-hot on the chosen action. The λ argument is ignored; the
  // search λ is params().lambda.
  policy::ActionProbs Probs(AohView aoh, std::optional<double> lambda) const override;
  std::optional<std::vector<double>> Values(AohView aoh,
                                            std::optional<double> lambda) const override;
  bool Markov() const override { return false; }

  Decision Decide(AohView aoh) const;
  const SearchParams& params() const { return params_; }
  // JSON-lines trace, one object per decision. Not thread-safe.
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  SearchParams params_;
  belief::BeliefPtr belief_;
  uint64_t seed_;
  std::string name_;
  std::ostream* trace_ = nullptr;
};

// The budget used at desk scale for test-time search, 5000 scaled by 0.02.
inline constexpr double kDeskBudgetFactor = 0.02;
inline constexpr int kTestTimeRollouts = static_cast<int>(5000 * kDeskBudgetFactor);
inline constexpr double kTestTimeLambda = 2.0;

// Greedy search with anchor = rollout = br, partner model = partner.
std::shared_ptr<SearchPolicy> TestTimeAgent(policy::PolicyPtr br, policy::PolicyPtr partner,
                                            belief::BeliefPtr belief,
                                            double lambda = kTestTimeLambda,
                                            int rollouts = kTestTimeRollouts, uint64_t seed = 0);

}  // namespace pikl::search

#endif  // PIKL_SEARCH_SEARCH_H_
