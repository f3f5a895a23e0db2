#ifndef PIKL_BR_BR_H_
#define PIKL_BR_BR_H_

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pikl/policy/checkpoint.h"
#include "pikl/policy/features.h"
#include "pikl/policy/mlp.h"
#include "pikl/policy/policy.h"
#include "pikl/rng.h"

namespace pikl::br {

inline constexpr double kAnchorFloor = 1e-8;

struct BRConfig {
  double lambda_reg = 0.1;
  double gamma = 0.999;
  // Per-game ε ~ U[epsilon_min, epsilon_max].
  double epsilon_min = 0.0;
  double epsilon_max = 0.1;
  std::vector<double> partner_lambda_vocabulary = {1, 2, 5, 10};
  bool partner_greedy = true;  // the partner never explores
  // τ of the returned policy's Probs. Acting is argmax either way; this sets
  // how sharp an anchor the BR makes for test-time search.
  double policy_temperature = 0.25;

  int64_t train_steps = 20000;
  int learner_steps_per_episode = 4;
  int warmup_episodes = 500;
  int replay_capacity = 20000;  // episodes
  double priority_exponent = 0.0;
  int batch_size = 128;
  std::vector<int> hidden = {128};
  double lr = 5e-4;
  double clip_norm = 10.0;
  int target_sync_every = 500;

  // Guard: abort when the mean |TD error| of a window exceeds the cap for
  // 3 windows in a row.
  int window_steps = 1000;
  double td_error_cap = 50.0;
  int eval_games = 200;  // per window, at a random partner λ; 0 disables
  uint64_t seed = 1;

  // Throws ConfigError.
  void Validate() const;
  nlohmann::json ToJson() const;
  static BRConfig FromJson(const nlohmann::json& j);
};

// argmax over legal a of q(a) + λ log max(bc(a), floor); lowest index on ties.
// Throws UsageError if no legal action has positive anchor mass.
int RegularizedArgmax(std::span<const double> q, std::span<const double> bc, double lambda,
                      uint64_t legal_mask);

// r on terminal steps, else r + γ q_next(a') with a' the regularized argmax.
double RegularizedTarget(std::span<const double> q_next, std::span<const double> bc_next,
                         uint64_t legal_mask, double reward, bool terminal,
                         const BRConfig& config);

// ε-greedy over the regularized score.
int ExploreAction(std::span<const double> q, std::span<const double> bc, uint64_t legal_mask,
                  double epsilon, const BRConfig& config, Rng& rng);

// ---------------------------------------------------------------------------
// Replay.

// One decision of the training seat. `reward` sums every reward from this
// move until the seat's next decision (the partner's move included).
struct ReplayStep {
  std::vector<float> x;
  uint64_t legal_mask = 0;
  std::vector<float> bc;  // anchor probabilities at this step
  int action = 0;
  float reward = 0.0f;
};

struct ReplayEntry {
  std::vector<ReplayStep> steps;
  float pre_reward = 0.0f;  // rewards before the seat's first decision
  double priority = 1.0;
  double Return() const;
};

class ReplayBuffer {
 public:
  ReplayBuffer(int capacity, double priority_exponent)
      : capacity_(capacity), alpha_(priority_exponent) {}

  // New entries get the highest priority seen so far.
  void Add(ReplayEntry entry);
  int64_t size() const { return static_cast<int64_t>(entries_.size()); }
  int64_t transitions() const { return transitions_; }
  const ReplayEntry& entry(int64_t i) const { return entries_[i]; }

  struct Index {
    int64_t entry;
    int step;
  };
  // Transitions drawn with probability ∝ priority^α per step (uniform over
  // transitions when α = 0).
  std::vector<Index> Sample(int n, Rng& rng) const;
  void UpdatePriority(int64_t entry, double priority);

 private:
  int capacity_;
  double alpha_;
  std::deque<ReplayEntry> entries_;
  int64_t transitions_ = 0;
  double max_priority_ = 1.0;
};

// ---------------------------------------------------------------------------
// Learner.

struct Transition {
  std::span<const float> x;
  int action = 0;
  double reward = 0.0;
  bool terminal = false;
  std::span<const float> x_next;
  uint64_t mask_next = 0;
  std::span<const float> bc_next;
};

// Picks a' from next-state values and anchor probabilities.
using TargetSelector =
    std::function<int(std::span<const double> q, std::span<const double> bc, uint64_t mask)>;

class TdLearner {
 public:
  TdLearner(policy::Mlp net, const BRConfig& config);

  // One TD update on the batch; returns |TD error| per transition.
  std::vector<double> Step(std::span<const Transition> batch);
  void SyncTarget() { target_.CopyFrom(online_); }
  void set_selector(TargetSelector s) { selector_ = std::move(s); }

  const policy::Mlp& online() const { return online_; }
  const policy::Mlp& target() const { return target_; }
  int64_t steps() const { return steps_; }

 private:
  BRConfig config_;
  policy::Mlp online_;
  policy::Mlp target_;
  policy::Adam adam_;
  TargetSelector selector_;
  int64_t steps_ = 0;
};

// ---------------------------------------------------------------------------
// Q-derived policy.

// Probs = softmax over legal actions of (Q + λ log max(anchor, floor)) / τ.
// Its argmax is the ε = 0 action rule.
class QPolicy : public policy::Policy {
 public:
  QPolicy(const hanabi::GameConfig& config, policy::Mlp net, policy::PolicyPtr anchor,
          double lambda_reg, double temperature = 1.0, std::string name = "pikl-br");

  std::string Name() const override { return name_; }
  const hanabi::GameConfig& config() const override { return config_; }
  policy::ActionProbs Probs(policy::AohView aoh, std::optional<double> lambda) const override;
  std::optional<std::vector<double>> Values(policy::AohView aoh,
                                            std::optional<double> lambda) const override;
  void BatchProbs(std::span<const policy::Observation* const> obs, std::optional<double> lambda,
                  std::vector<policy::ActionProbs>* out) const override;

  // Raw Q for one observation, per canonical index (illegal entries -inf).
  std::vector<double> Q(const policy::Observation& obs) const;
  int Greedy(const policy::Observation& obs) const;

  const policy::Mlp& net() const { return net_; }
  const policy::FeatureEncoder& encoder() const { return encoder_; }
  double lambda_reg() const { return lambda_reg_; }
  const policy::PolicyPtr& anchor() const { return anchor_; }

  // The anchor is embedded when λ > 0 (it must be a network policy).
  policy::Checkpoint ToCheckpoint() const;
  static std::shared_ptr<QPolicy> FromCheckpoint(const policy::Checkpoint& c);

 private:
  policy::ActionProbs FromScores(const std::vector<double>& q, std::span<const double> bc,
                                 uint64_t mask) const;

  hanabi::GameConfig config_;
  policy::FeatureEncoder encoder_;
  policy::Mlp net_;
  policy::PolicyPtr anchor_;
  double lambda_reg_;
  double temperature_;
  std::string name_;
};

std::shared_ptr<QPolicy> LoadQPolicy(
    const std::string& path, const std::optional<hanabi::GameConfig>& expected = std::nullopt);

struct BRWindow {
  int64_t step = 0;
  double mean_abs_td = 0.0;
  double eval_mean_score = 0.0;  // NaN when evaluation is off
  double eval_lambda = 0.0;
  int64_t episodes = 0;
  nlohmann::json ToJson() const;
};

struct BRReport {
  std::vector<BRWindow> windows;
  int64_t episodes = 0;
  double seconds = 0.0;
  nlohmann::json ToJson() const;
};

struct BRHooks {
  std::ostream* progress = nullptr;  // JSON lines, one per window
  // Overrides a' selection (both exploration and target); for reductions.
  TargetSelector selector;
};

// One cross-play episode: `seat` acts ε-greedily on `net` (ε drawn from the
// config's range), the partner follows its policy with a λ input drawn from
// the vocabulary. `selector`, if set, replaces the regularized argmax.
ReplayEntry CollectEpisode(const policy::Policy& partner, const policy::Policy& anchor,
                           const policy::Mlp& net, const BRConfig& config, uint64_t seed, int seat,
                           Rng& rng, const TargetSelector& selector = {},
                           int* final_score = nullptr);

// Cross-play Q-learning against a frozen partner with the anchor-regularized
// target and exploration.
std::shared_ptr<QPolicy> TrainBr(policy::PolicyPtr partner, policy::PolicyPtr anchor_bc,
                                 const BRConfig& config, BRReport* report = nullptr,
                                 const BRHooks& hooks = {});

}  // namespace pikl::br

#endif  // PIKL_BR_BR_H_
