#ifndef PIKL_IL_IL_H_
#define PIKL_IL_IL_H_

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pikl/belief/belief.h"
#include "pikl/hanabi/record.h"
#include "pikl/policy/bc.h"
#include "pikl/policy/network.h"
#include "pikl/rng.h"

namespace pikl::il {

struct LambdaComponent {
  double mu = 1.0;
  double sigma = 0.25;
};

// Mixture of Gaussians, each truncated to (0, 2μ).
struct LambdaDistribution {
  std::vector<LambdaComponent> components;
  std::vector<double> weights;  // empty means uniform

  static LambdaDistribution Default();  // μ ∈ {1, 2, 5, 10}, σ = μ/4
  // Throws ConfigError.
  void Validate() const;
  std::vector<double> Mus() const;

  nlohmann::json ToJson() const;
  static LambdaDistribution FromJson(const nlohmann::json& j);
};

struct LambdaSample {
  double value = 1.0;
  double mu = 1.0;  // label for λ-conditioning
};

LambdaSample SampleLambda(const LambdaDistribution& dist, Rng& rng);

enum class CollectMode { kBothSeats, kSingleSeatSound };
std::string CollectModeName(CollectMode m);
CollectMode CollectModeFromName(const std::string& s);

struct ILConfig {
  int k = 1;
  int d = 2000;
  int rollouts_M = 200;
  CollectMode mode = CollectMode::kBothSeats;
  // Belief training games per epoch are sized to about factor * d decision
  // points of the modelled seat; 0 keeps belief.games_per_epoch.
  int belief_decision_points_factor = 10;
  belief::BeliefTrainConfig belief;
  policy::TrainConfig bc;
  bool color_shuffle = true;
  int workers = 1;  // game-generation threads; results do not depend on it
  uint64_t seed = 1;

  void Validate() const;
  nlohmann::json ToJson() const;
  static ILConfig FromJson(const nlohmann::json& j);
};

struct GenStats {
  int64_t decisions = 0;
  int64_t hands_requested = 0;
  int64_t hands_shortfall = 0;
  double acceptance_rate() const {
    return hands_requested == 0
               ? 1.0
               : 1.0 - static_cast<double>(hands_shortfall) / hands_requested;
  }
};

// One game where each seat with a λ searches (Greedy piKL-LBS with that λ,
// rollouts by pi_roll, anchor pi_anc) and a seat without one plays pi_roll's
// argmax. The record labels each searching seat's moves with its μ; if only
// one seat searches, only that seat is marked as training data.
hanabi::GameRecord GenerateGame(const hanabi::GameConfig& config, policy::PolicyPtr pi_roll,
                                policy::PolicyPtr pi_anc, const belief::BeliefModel& belief,
                                const std::array<std::optional<LambdaSample>, 2>& lambdas,
                                int rollouts_M, uint64_t seed, GenStats* stats = nullptr);

// λ per seat for one game of the given mode.
std::array<std::optional<LambdaSample>, 2> DrawSeatLambdas(const LambdaDistribution& dist,
                                                           CollectMode mode, Rng& rng);

struct ILIteration {
  belief::BeliefTrainReport belief;
  policy::TrainReport conditioned;
  policy::TrainReport unconditioned;
  double generated_mean_score = 0.0;
  double acceptance_rate = 1.0;
  double seconds = 0.0;
  nlohmann::json ToJson() const;
};

struct ILResult {
  policy::PolicyPtr il;        // λ-conditioned (the anchor itself when k = 0)
  policy::PolicyPtr il_prime;  // same data, no λ input
  std::shared_ptr<belief::LearnedBelief> belief;  // last one trained
  std::vector<hanabi::GameRecord> dataset;        // last iteration's games
  std::vector<ILIteration> iterations;
};

struct ILHooks {
  std::ostream* progress = nullptr;  // JSON lines
  std::string out_dir;               // checkpoints after every stage when set
  int progress_every = 100;          // games
};

// The iterated loop. The anchor is `pi_bc` on every search call.
ILResult RunPiklIl(policy::PolicyPtr pi_bc, const LambdaDistribution& dist,
                   const ILConfig& il, const ILHooks& hooks = {});

}  // namespace pikl::il

#endif  // PIKL_IL_IL_H_
