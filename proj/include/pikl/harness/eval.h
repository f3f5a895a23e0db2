#ifndef PIKL_HARNESS_EVAL_H_
#define PIKL_HARNESS_EVAL_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "json.hpp"
#include "pikl/hanabi/record.h"
#include "pikl/policy/policy.h"

namespace pikl::harness {

struct EvalReport {
  int64_t n_games = 0;
  double mean = 0.0;
  double stderr_of_mean = 0.0;  // sample stddev / sqrt(n)
  double perfect_fraction = 0.0;
  std::vector<int64_t> histogram;  // index = score, 0..max score
  std::vector<uint64_t> seeds;
  std::vector<int> scores;  // per game, same order as seeds

  // Mean, standard error, perfect fraction and histogram from `scores`.
  static EvalReport FromScores(std::vector<int> scores, std::vector<uint64_t> seeds,
                               int max_score);
  nlohmann::json ToJson() const;
};

struct EvalOptions {
  std::optional<double> lambda_a;  // λ input for policies that take one
  std::optional<double> lambda_b;
  bool greedy = true;  // argmax actions; false samples from Probs
  int workers = 1;
  // Replaces the seeded shuffle; used for rigged decks.
  std::function<std::vector<hanabi::Card>(uint64_t seed)> deck;
  // Receives each finished game (in game order).
  std::function<void(const hanabi::GameRecord&)> on_record;
};

// One game between `p0` (seat 0) and `p1` (seat 1). Each seat sees its own
// action-observation history.
hanabi::GameRecord PlayGame(const policy::Policy& p0, const policy::Policy& p1,
                            std::optional<double> lambda0, std::optional<double> lambda1,
                            uint64_t seed, bool greedy,
                            const std::vector<hanabi::Card>* deck = nullptr);

// n cross-play games with seeds seed_base..seed_base+n-1; `a` takes seat 0 in
// even games and seat 1 in odd ones. Throws UsageError for n <= 0 and
// ConfigError when the policies disagree on the game config.
EvalReport Evaluate(const policy::Policy& a, const policy::Policy& b, int64_t n,
                    uint64_t seed_base, const EvalOptions& options = {});

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_EVAL_H_
