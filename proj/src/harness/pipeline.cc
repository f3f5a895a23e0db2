#include "pikl/harness/pipeline.h"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>

#include "pikl/errors.h"
#include "pikl/harness/dataset.h"
#include "pikl/policy/checkpoint.h"
#include "pikl/policy/scripted.h"

namespace pikl::harness {

using nlohmann::json;

json RunConfig::ToJson() const {
  return {{"schema_version", kConfigSchemaVersion},
          {"game", game.ToJson()},
          {"human_data", human.ToJson()},
          {"bc", bc.ToJson()},
          {"bc_color_shuffle", bc_color_shuffle},
          {"il", il.ToJson()},
          {"lambdas", lambdas.ToJson()},
          {"br", br.ToJson()},
          {"eval", {{"games", eval_games}, {"seed_base", eval_seed_base}}},
          {"think_time", think.ToJson()}};
}

RunConfig RunConfig::FromJson(const json& j) {
  if (!j.is_object() || !j.contains("schema_version")) {
    throw ConfigError("config has no schema_version");
  }
  if (j["schema_version"] != kConfigSchemaVersion) {
    throw ConfigError("config schema_version " + j["schema_version"].dump() + ", expected " +
                      std::to_string(kConfigSchemaVersion));
  }
  static const std::set<std::string> kSections = {
      "schema_version", "game", "human_data", "bc", "bc_color_shuffle", "il",
      "lambdas",        "br",   "eval",       "think_time"};
  for (const auto& [k, v] : j.items()) {
    if (!kSections.count(k)) throw ConfigError("unknown config key: " + k);
  }
  RunConfig c;
  try {
    if (j.contains("game")) c.game = hanabi::GameConfig::FromJson(j["game"]);
    if (j.contains("human_data")) c.human = HumanDataConfig::FromJson(j["human_data"]);
    if (j.contains("bc")) c.bc = policy::TrainConfig::FromJson(j["bc"]);
    c.bc_color_shuffle = j.value("bc_color_shuffle", c.bc_color_shuffle);
    if (j.contains("il")) c.il = il::ILConfig::FromJson(j["il"]);
    if (j.contains("lambdas")) c.lambdas = il::LambdaDistribution::FromJson(j["lambdas"]);
    if (j.contains("br")) c.br = br::BRConfig::FromJson(j["br"]);
    if (j.contains("eval")) {
      c.eval_games = j["eval"].value("games", c.eval_games);
      c.eval_seed_base = j["eval"].value("seed_base", c.eval_seed_base);
    }
    if (j.contains("think_time")) c.think = ThinkTimeConfig::FromJson(j["think_time"]);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config: ") + e.what());
  }
  c.game.Validate();
  if (c.eval_games <= 0) throw ConfigError("eval.games must be positive");
  return c;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + path + " is not JSON: " + e.what());
  }
  return FromJson(j);
}

policy::PolicyPtr LoadPolicySpec(const std::string& spec, const hanabi::GameConfig& config) {
  if (spec == "uniform") return std::make_shared<policy::UniformPolicy>(config);
  if (spec.rfind("scripted:", 0) == 0) {
    const std::string rest = spec.substr(9);
    const auto colon = rest.find(':');
    const std::string skill = rest.substr(0, colon);
    double noise = 0.0;
    if (colon != std::string::npos) {
      try {
        noise = std::stod(rest.substr(colon + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad noise in policy spec: " + spec);
      }
    }
    return std::make_shared<policy::ScriptedPolicy>(config, policy::SkillFromName(skill), noise);
  }
  const policy::Checkpoint c = policy::LoadCheckpoint(spec, "", config);
  if (c.kind == "policy") return policy::NetworkPolicy::FromCheckpoint(c);
  if (c.kind == "q") return br::QPolicy::FromCheckpoint(c);
  throw ConfigError(spec + " holds a '" + c.kind + "' checkpoint, not a policy");
}

belief::BeliefPtr LoadBeliefSpec(const std::string& spec, const hanabi::GameConfig& config) {
  if (spec == "count-prior") return std::make_shared<belief::CountPriorBelief>();
  return belief::LearnedBelief::FromCheckpoint(policy::LoadCheckpoint(spec, "belief", config));
}

json Table1Result::ToJson() const {
  json cells_j = json::array();
  for (const auto& c : cells) {
    cells_j.push_back({{"lambda", c.lambda},
                       {"self_play", {{"mean", c.self_play.mean}, {"stderr", c.self_play.stderr_of_mean}}},
                       {"with_br", {{"mean", c.with_br.mean}, {"stderr", c.with_br.stderr_of_mean}}}});
  }
  return {{"bc_self_play", {{"mean", bc_self.mean}, {"stderr", bc_self.stderr_of_mean}}},
          {"il_prime_self_play",
           {{"mean", il_prime_self.mean}, {"stderr", il_prime_self.stderr_of_mean}}},
          {"cells", cells_j},
          {"seconds", seconds},
          {"stages", stages}};
}

namespace {

double Since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

void Emit(std::ostream* out, json j) {
  if (out != nullptr) *out << j.dump() << std::endl;
}

}  // namespace

Table1Result RunTable1(const RunConfig& config, std::ostream* progress, const std::string& out_dir,
                       Table1Artifacts* artifacts) {
  const auto t0 = std::chrono::steady_clock::now();
  if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
  auto path = [&](const std::string& f) { return out_dir + "/" + f; };
  Table1Result res;

  auto t = std::chrono::steady_clock::now();
  const auto human = GenerateHumanData(config.game, config.human);
  if (!out_dir.empty()) WriteDataset(path("human.jsonl"), human);
  res.stages["human_data"] = {{"games", human.size()}, {"seconds", Since(t)}};
  Emit(progress, {{"event", "stage_done"}, {"stage", "human_data"}, {"seconds", Since(t)}});

  t = std::chrono::steady_clock::now();
  policy::TrainReport bc_report;
  auto bc = policy::BcTrain(human, {config.bc_color_shuffle, false, {}, "bc"}, config.bc, &bc_report);
  if (!out_dir.empty()) policy::SaveCheckpoint(bc->ToCheckpoint(), path("bc.json"));
  res.stages["bc"] = {{"seconds", Since(t)}, {"report", bc_report.ToJson()}};
  Emit(progress, {{"event", "stage_done"}, {"stage", "bc"}, {"seconds", Since(t)}});

  t = std::chrono::steady_clock::now();
  il::ILHooks hooks;
  hooks.progress = progress;
  hooks.out_dir = out_dir.empty() ? "" : path("il");
  const il::ILResult ilr = il::RunPiklIl(bc, config.lambdas, config.il, hooks);
  if (!out_dir.empty()) {
    if (auto* n = dynamic_cast<const policy::NetworkPolicy*>(ilr.il.get())) {
      policy::SaveCheckpoint(n->ToCheckpoint(), path("il.json"));
    }
    if (auto* n = dynamic_cast<const policy::NetworkPolicy*>(ilr.il_prime.get())) {
      policy::SaveCheckpoint(n->ToCheckpoint(), path("il_prime.json"));
    }
  }
  res.stages["pikl_il"] = {{"seconds", Since(t)}};
  Emit(progress, {{"event", "stage_done"}, {"stage", "pikl_il"}, {"seconds", Since(t)}});

  t = std::chrono::steady_clock::now();
  br::BRConfig brc = config.br;
  brc.partner_lambda_vocabulary = config.lambdas.Mus();
  br::BRReport br_report;
  br::BRHooks br_hooks;
  br_hooks.progress = progress;
  auto br_policy = br::TrainBr(ilr.il, bc, brc, &br_report, br_hooks);
  if (!out_dir.empty()) policy::SaveCheckpoint(br_policy->ToCheckpoint(), path("br.json"));
  res.stages["pikl_br"] = {{"seconds", Since(t)}, {"episodes", br_report.episodes}};
  Emit(progress, {{"event", "stage_done"}, {"stage", "pikl_br"}, {"seconds", Since(t)}});

  t = std::chrono::steady_clock::now();
  const int64_t n = config.eval_games;
  const uint64_t base = config.eval_seed_base;
  res.bc_self = Evaluate(*bc, *bc, n, base);
  res.il_prime_self = Evaluate(*ilr.il_prime, *ilr.il_prime, n, base);
  for (double mu : config.lambdas.Mus()) {
    Table1Cell cell;
    cell.lambda = mu;
    EvalOptions self;
    self.lambda_a = self.lambda_b = mu;
    cell.self_play = Evaluate(*ilr.il, *ilr.il, n, base, self);
    EvalOptions cross;
    cross.lambda_b = mu;
    cell.with_br = Evaluate(*br_policy, *ilr.il, n, base, cross);
    Emit(progress, {{"event", "cell"},
                    {"lambda", mu},
                    {"self_play", cell.self_play.mean},
                    {"with_br", cell.with_br.mean}});
    res.cells.push_back(std::move(cell));
  }
  res.stages["eval"] = {{"seconds", Since(t)}};
  res.seconds = Since(t0);
  if (artifacts != nullptr) {
    artifacts->bc = bc;
    artifacts->il = ilr.il;
    artifacts->il_prime = ilr.il_prime;
    artifacts->belief = ilr.belief;
    artifacts->br = br_policy;
  }
  if (!out_dir.empty()) {
    std::ofstream(path("table1.json")) << res.ToJson().dump(2) << "\n";
    if (ilr.belief) policy::SaveCheckpoint(ilr.belief->ToCheckpoint(), path("belief.json"));
  }
  return res;
}

}  // namespace pikl::harness
