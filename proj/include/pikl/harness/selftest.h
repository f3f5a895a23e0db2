#ifndef PIKL_HARNESS_SELFTEST_H_
#define PIKL_HARNESS_SELFTEST_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "pikl/hanabi/game.h"
#include "pikl/hanabi/record.h"
#include "pikl/policy/scripted.h"

namespace pikl::harness {

struct SelfTestReport {
  int64_t games = 0;
  int64_t moves = 0;
  std::vector<std::string> failures;  // first few, "game G move M: reason"
  int64_t failure_count = 0;
  double seconds = 0.0;
  bool ok() const { return failure_count == 0; }
  nlohmann::json ToJson() const;
};

// Random-legal games checked move by move: card conservation, token and life
// bounds, score accounting, termination rules, length cap, and replay
// determinism of the recorded game.
SelfTestReport EngineSelfTest(const hanabi::GameConfig& config, int64_t games, uint64_t seed);

// Synthetic "human" games: each seat's skill is drawn uniformly from
// `skills`, actions are sampled from the noisy scripted policy.
struct HumanDataConfig {
  int64_t games = 5000;
  std::vector<policy::Skill> skills = {policy::Skill::kWeak, policy::Skill::kMedium,
                                       policy::Skill::kStrong};
  double noise = 0.1;
  uint64_t seed = 1;

  void Validate() const;  // throws ConfigError
  nlohmann::json ToJson() const;
  static HumanDataConfig FromJson(const nlohmann::json& j);
};

std::vector<hanabi::GameRecord> GenerateHumanData(const hanabi::GameConfig& config,
                                                  const HumanDataConfig& data);

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_SELFTEST_H_
