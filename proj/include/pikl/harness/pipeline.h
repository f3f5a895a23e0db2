#ifndef PIKL_HARNESS_PIPELINE_H_
#define PIKL_HARNESS_PIPELINE_H_

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pikl/belief/belief.h"
#include "pikl/br/br.h"
#include "pikl/harness/eval.h"
#include "pikl/harness/selftest.h"
#include "pikl/harness/think_time.h"
#include "pikl/il/il.h"
#include "pikl/policy/bc.h"
#include "pikl/policy/network.h"

namespace pikl::harness {

inline constexpr int kConfigSchemaVersion = 1;

// Everything a run needs, read from one JSON file. Missing sections keep
// their defaults; `schema_version` is required.
struct RunConfig {
  hanabi::GameConfig game = hanabi::GameConfig::Mini(2, 4);
  HumanDataConfig human;
  policy::TrainConfig bc;
  bool bc_color_shuffle = true;
  il::ILConfig il;
  il::LambdaDistribution lambdas = il::LambdaDistribution::Default();
  br::BRConfig br;
  int64_t eval_games = 2000;
  uint64_t eval_seed_base = 1000000;
  ThinkTimeConfig think;

  nlohmann::json ToJson() const;
  // Throws ConfigError on a missing or different schema_version.
  static RunConfig FromJson(const nlohmann::json& j);
  static RunConfig Load(const std::string& path);
};

// "uniform", "scripted:<skill>:<noise>", or a checkpoint file holding a
// network policy or a Q policy. Throws ConfigError on a config mismatch.
policy::PolicyPtr LoadPolicySpec(const std::string& spec, const hanabi::GameConfig& config);

// "count-prior" or a learned-belief checkpoint file.
belief::BeliefPtr LoadBeliefSpec(const std::string& spec, const hanabi::GameConfig& config);

struct Table1Cell {
  double lambda = 0.0;
  EvalReport self_play;  // π_IL(λ) with itself
  EvalReport with_br;    // BR with π_IL(λ)
};

struct Table1Result {
  EvalReport bc_self;
  EvalReport il_prime_self;
  std::vector<Table1Cell> cells;
  double seconds = 0.0;
  nlohmann::json stages;  // per-stage timings and training reports
  nlohmann::json ToJson() const;
};

struct Table1Artifacts {
  std::shared_ptr<policy::NetworkPolicy> bc;
  policy::PolicyPtr il;
  policy::PolicyPtr il_prime;
  std::shared_ptr<belief::LearnedBelief> belief;
  std::shared_ptr<br::QPolicy> br;
};

// Human data -> BC -> piKL-IL -> piKL-BR -> evaluation grid over the λ
// vocabulary. Checkpoints land in `out_dir` when it is set.
Table1Result RunTable1(const RunConfig& config, std::ostream* progress = nullptr,
                       const std::string& out_dir = "", Table1Artifacts* artifacts = nullptr);

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_PIPELINE_H_
