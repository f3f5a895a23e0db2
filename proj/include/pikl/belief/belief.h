#ifndef PIKL_BELIEF_BELIEF_H_
#define PIKL_BELIEF_BELIEF_H_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "pikl/hanabi/observation.h"
#include "pikl/policy/checkpoint.h"
#include "pikl/policy/features.h"
#include "pikl/policy/mlp.h"
#include "pikl/policy/policy.h"
#include "pikl/rng.h"

namespace pikl::belief {

using hanabi::AohView;
using hanabi::Card;
using hanabi::Observation;

// The acting seat's own hand, oldest slot first.
using Hand = std::vector<Card>;

// Count- and hint-consistent with the current observation.
bool IsConsistent(const Observation& obs, const Hand& hand);

struct SampleResult {
  std::vector<Hand> hands;
  int64_t attempts = 0;
  double acceptance_rate() const {
    return attempts == 0 ? 1.0 : static_cast<double>(hands.size()) / attempts;
  }
};

// Distribution over the current observer's own hand given their AOH. The AOH
// must start at the deal (turn 0) when a model needs the full history.
class BeliefModel {
 public:
  virtual ~BeliefModel() = default;
  virtual std::string Name() const = 0;
  // Up to n consistent hands within max_attempts proposals.
  virtual SampleResult SampleUpTo(AohView aoh, int n, int64_t max_attempts, Rng& rng) const = 0;
};
using BeliefPtr = std::shared_ptr<const BeliefModel>;

inline constexpr int kRejectionFactor = 100;

// Exactly n hands, or BeliefError (reporting the acceptance rate) once
// kRejectionFactor * n proposals are spent.
std::vector<Hand> SampleHands(const BeliefModel& belief, AohView aoh, int n, Rng& rng);

// ---------------------------------------------------------------------------
// Exact enumeration (small configs only).

inline constexpr int64_t kMaxExactCandidates = 1'000'000;

struct WeightedHand {
  Hand hand;
  double weight = 0.0;
};

class ExactBelief {
 public:
  // Hypotheses weighted by card-count prior times the partner policy's
  // likelihood of every partner action in the AOH. Throws BeliefError when
  // more than kMaxExactCandidates count/hint-consistent hands exist, or when
  // no hypothesis explains the partner's actions.
  static ExactBelief Compute(AohView aoh, const policy::Policy& partner);

  const std::vector<WeightedHand>& support() const { return support_; }
  // P(slot holds card type t), indexed [slot][type].
  std::vector<std::vector<double>> SlotMarginals(int num_card_types, int num_ranks) const;
  Hand Sample(Rng& rng) const;

 private:
  std::vector<WeightedHand> support_;
  std::vector<double> cumulative_;
};

// Count- and hint-consistent hands with their count-prior weights (product
// of falling factorials of unseen counts), unnormalized.
std::vector<WeightedHand> EnumerateCandidates(const Observation& obs,
                                              int64_t cap = kMaxExactCandidates);

// Rebuilds the state the partner saw before each of their moves under a
// hypothesis of the owner's current hand and returns the product of the
// partner's action probabilities (0 if the hypothesis contradicts the AOH).
double PartnerLikelihood(AohView aoh, const Hand& hand, const policy::Policy& partner);

class ExactBeliefModel : public BeliefModel {
 public:
  explicit ExactBeliefModel(policy::PolicyPtr partner) : partner_(std::move(partner)) {}
  std::string Name() const override { return "exact"; }
  SampleResult SampleUpTo(AohView aoh, int n, int64_t max_attempts, Rng& rng) const override;

 private:
  policy::PolicyPtr partner_;
};

// Hand drawn from unseen counts and hint knowledge, ignoring partner actions.
class CountPriorBelief : public BeliefModel {
 public:
  std::string Name() const override { return "count-prior"; }
  SampleResult SampleUpTo(AohView aoh, int n, int64_t max_attempts, Rng& rng) const override;
};

// ---------------------------------------------------------------------------
// Learned autoregressive belief.

// p(c_1 | τ) p(c_2 | τ, c_1) ... over slots oldest to newest. The vocabulary
// is every card type plus an "empty slot" token (index T) for short hands.
//
// Network input for slot j: the observer's public+private features, one-hot
// slot j, and counts of the types already drawn for slots < j. With
// `count_prior` the logits are offset by log(available copies) restricted to
// the slot's hint knowledge, so impossible cards get -inf and the network
// only learns a correction to the count prior.
class LearnedBelief : public BeliefModel {
 public:
  LearnedBelief(const hanabi::GameConfig& config, policy::Mlp net, bool count_prior);

  std::string Name() const override { return "learned"; }
  SampleResult SampleUpTo(AohView aoh, int n, int64_t max_attempts, Rng& rng) const override;

  const hanabi::GameConfig& config() const { return config_; }
  const policy::Mlp& net() const { return net_; }
  bool count_prior() const { return count_prior_; }
  int vocab_size() const { return config_.NumCardTypes() + 1; }
  int input_size() const { return encoder_.size() + config_.hand_size + config_.NumCardTypes(); }

  // Conditional distribution of slot `slot` given the earlier slots' cards.
  std::vector<double> Conditional(const Observation& obs, std::span<const Card> prefix,
                                  int slot) const;
  // Sum over slots of log p(true card | history, earlier true cards), using
  // the empty token for unoccupied slots.
  double LogLikelihood(const Observation& obs, const Hand& true_hand) const;

  // Writes the input column for one slot; `prev_counts` holds the types
  // drawn so far.
  void EncodeInput(std::span<const float> features, int slot,
                   std::span<const float> prev_counts, std::span<float> out) const;
  // Additive logit offsets for one slot (0 without the count prior).
  void PriorOffsets(const Observation& obs, const hanabi::CardCounts& available, int slot,
                    std::span<float> out) const;

  policy::Checkpoint ToCheckpoint() const;
  static std::shared_ptr<LearnedBelief> FromCheckpoint(const policy::Checkpoint& c);

 private:
  hanabi::GameConfig config_;
  policy::FeatureEncoder encoder_;
  policy::Mlp net_;
  bool count_prior_;
};

struct BeliefTrainConfig {
  std::vector<int> hidden = {128};
  double lr = 1e-3;
  int batch_size = 128;
  int epochs = 80;
  int games_per_epoch = 1000;  // fresh cross-play games each epoch
  int heldout_games = 200;
  bool count_prior = true;
  uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static BeliefTrainConfig FromJson(const nlohmann::json& j);
};

struct BeliefTrainReport {
  std::vector<double> heldout_nll_per_card;  // per epoch
  double count_prior_nll_per_card = 0.0;     // same held-out data, prior only
  int best_epoch = 0;
  nlohmann::json ToJson() const;
};

// Seat `pi` plays with `rho`; training examples come only from the seat
// played by `pi` (both seat assignments alternate over games). Returns the
// epoch with the best held-out per-card log-likelihood.
std::shared_ptr<LearnedBelief> TrainBelief(const policy::Policy& pi, const policy::Policy& rho,
                                           const hanabi::GameConfig& config,
                                           const BeliefTrainConfig& hyper,
                                           BeliefTrainReport* report = nullptr);

}  // namespace pikl::belief

#endif  // PIKL_BELIEF_BELIEF_H_
