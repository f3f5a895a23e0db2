#include "pikl/harness/selftest.h"

#include <chrono>

#include "pikl/errors.h"
#include "pikl/harness/eval.h"
#include "pikl/hanabi/state.h"

namespace pikl::harness {

using hanabi::Action;
using hanabi::GameState;
using hanabi::Termination;

nlohmann::json SelfTestReport::ToJson() const {
  return {{"games", games},
          {"moves", moves},
          {"failure_count", failure_count},
          {"failures", failures},
          {"seconds", seconds},
          {"ok", ok()}};
}

namespace {

std::string TerminationProblem(const GameState& s) {
  const hanabi::GameConfig& cfg = s.config();
  const auto& st = s.status();
  switch (st.kind) {
    case Termination::kOngoing: return "terminal state reports Ongoing";
    case Termination::kPerfectScore:
      if (s.score() != cfg.MaxScore() || st.final_score != cfg.MaxScore()) return "perfect score mismatch";
      break;
    case Termination::kLivesExhausted:
      if (s.lives() != 0 || st.final_score != 0) return "lives-exhausted state keeps lives or score";
      break;
    case Termination::kDeckExhaustedFinalTurnsDone:
      if (s.deck_size() != 0 || s.final_turns_remaining() != 0) return "deck end before the last turns";
      if (st.final_score != s.score()) return "final score differs from fireworks";
      break;
  }
  return {};
}

}  // namespace

SelfTestReport EngineSelfTest(const hanabi::GameConfig& config, int64_t games, uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  config.Validate();
  SelfTestReport rep;
  auto fail = [&](int64_t g, int m, const std::string& why) {
    ++rep.failure_count;
    if (rep.failures.size() < 20) {
      rep.failures.push_back("game " + std::to_string(g) + " move " + std::to_string(m) + ": " + why);
    }
  };
  const int na = config.NumActions();
  for (int64_t g = 0; g < games; ++g) {
    const uint64_t game_seed = DeriveSeed(seed, g);
    GameState s = hanabi::NewGame(config, game_seed);
    if (hanabi::NewGame(config, game_seed).RemainingDeck() != s.RemainingDeck()) {
      fail(g, 0, "same seed dealt a different deck");
    }
    hanabi::GameRecord rec = hanabi::BeginRecord(s, game_seed);
    Rng rng(DeriveSeed(game_seed, 1));
    int moves = 0, successes = 0, cumulative = 0;
    while (!s.terminal()) {
      const uint64_t mask = s.LegalMask();
      if (mask == 0) {
        fail(g, moves, "no legal action in a live state");
        break;
      }
      std::vector<int> legal;
      for (int i = 0; i < na; ++i) {
        if ((mask >> i) & 1u) legal.push_back(i);
      }
      const int a = legal[rng.UniformInt(legal.size())];
      const int p = s.active_player();
      const int tokens = s.hint_tokens(), lives = s.lives();
      const auto out = s.Apply(Action::FromIndex(config, a));
      hanabi::RecordStep(rec, p, Action::FromIndex(config, a), out);
      ++moves;
      cumulative += out.reward;
      successes += s.last_move()->success;
      if (const std::string e = s.CheckInvariants(); !e.empty()) fail(g, moves, e);
      if (s.score() != successes) fail(g, moves, "score differs from successful plays");
      if (s.lives() < lives - 1 || s.hint_tokens() > tokens + 1) fail(g, moves, "resource jump");
      if (moves > config.MaxGameLength()) {
        fail(g, moves, "game longer than the length cap");
        break;
      }
    }
    rep.moves += moves;
    if (const std::string e = TerminationProblem(s); !e.empty()) fail(g, moves, e);
    if (cumulative != s.status().final_score) fail(g, moves, "rewards do not sum to the final score");
    try {
      const GameState r = hanabi::Replay(rec);
      if (r.status() != s.status() || r.RemainingDeck() != s.RemainingDeck() ||
          r.hand(0) != s.hand(0) || r.hand(1) != s.hand(1)) {
        fail(g, moves, "replay diverged");
      }
    } catch (const std::exception& e) {
      fail(g, moves, std::string("replay failed: ") + e.what());
    }
    ++rep.games;
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void HumanDataConfig::Validate() const {
  if (games <= 0) throw ConfigError("human data needs games > 0");
  if (skills.empty()) throw ConfigError("human data needs at least one skill");
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("noise must be in [0, 1]");
}

nlohmann::json HumanDataConfig::ToJson() const {
  std::vector<std::string> names;
  for (auto s : skills) names.push_back(policy::SkillName(s));
  return {{"games", games}, {"skills", names}, {"noise", noise}, {"seed", seed}};
}

HumanDataConfig HumanDataConfig::FromJson(const nlohmann::json& j) {
  HumanDataConfig c;
  c.games = j.value("games", c.games);
  if (j.contains("skills")) {
    c.skills.clear();
    for (const auto& s : j["skills"]) c.skills.push_back(policy::SkillFromName(s.get<std::string>()));
  }
  c.noise = j.value("noise", c.noise);
  c.seed = j.value("seed", c.seed);
  c.Validate();
  return c;
}

std::vector<hanabi::GameRecord> GenerateHumanData(const hanabi::GameConfig& config,
                                                  const HumanDataConfig& data) {
  data.Validate();
  std::vector<policy::ScriptedPolicy> pool;
  for (auto s : data.skills) pool.emplace_back(config, s, data.noise);
  Rng rng(DeriveSeed(data.seed, 0x4855));
  std::vector<hanabi::GameRecord> out;
  out.reserve(data.games);
  for (int64_t g = 0; g < data.games; ++g) {
    const auto& a = pool[rng.UniformInt(pool.size())];
    const auto& b = pool[rng.UniformInt(pool.size())];
    out.push_back(PlayGame(a, b, std::nullopt, std::nullopt, DeriveSeed(data.seed, g), false));
  }
  return out;
}

}  // namespace pikl::harness
