#include "pikl/hanabi/record.h"

#include <algorithm>

#include "pikl/errors.h"

namespace pikl::hanabi {

bool GameRecord::TrainsOn(int player) const {
  return train_players.empty() ||
         std::find(train_players.begin(), train_players.end(), player) != train_players.end();
}

std::optional<double> GameRecord::LambdaLabel(int player) const {
  for (const auto& m : moves) {
    if (m.player == player && m.lambda_label) return m.lambda_label;
  }
  return std::nullopt;
}

nlohmann::json GameRecord::ToJson() const {
  nlohmann::json j;
  j["schema_version"] = kRecordSchemaVersion;
  j["config"] = config.ToJson();
  j["seed"] = seed;
  nlohmann::json d = nlohmann::json::array();
  for (const Card& c : deck) d.push_back({c.color, c.rank});
  j["deck"] = d;
  nlohmann::json acts = nlohmann::json::array();
  for (const auto& m : moves) {
    nlohmann::json a = {{"player", m.player}, {"action", m.action}};
    if (m.lambda_label) a["lambda_label"] = *m.lambda_label;
    acts.push_back(a);
  }
  j["actions"] = acts;
  j["rewards"] = rewards;
  j["final_score"] = final_score;
  j["termination"] = aborted ? std::string("Aborted") : TerminationName(termination);
  if (!train_players.empty()) j["train_players"] = train_players;
  return j;
}

GameRecord GameRecord::FromJson(const nlohmann::json& j) {
  GameRecord r;
  try {
    if (!j.is_object()) throw FormatError("record is not a JSON object");
    const int version = j.at("schema_version").get<int>();
    if (version != kRecordSchemaVersion) {
      throw FormatError("record schema version " + std::to_string(version) + ", expected " +
                        std::to_string(kRecordSchemaVersion));
    }
    r.config = GameConfig::FromJson(j.at("config"));
    r.seed = j.at("seed").get<uint64_t>();
    for (const auto& c : j.at("deck")) {
      r.deck.push_back(Card{static_cast<int8_t>(c.at(0).get<int>()),
                            static_cast<int8_t>(c.at(1).get<int>())});
    }
    for (const auto& a : j.at("actions")) {
      RecordedMove m;
      m.player = a.at("player").get<int>();
      m.action = a.at("action").get<int>();
      if (a.contains("lambda_label") && !a["lambda_label"].is_null()) {
        m.lambda_label = a["lambda_label"].get<double>();
      }
      r.moves.push_back(m);
    }
    r.rewards = j.at("rewards").get<std::vector<int>>();
    r.final_score = j.at("final_score").get<int>();
    const std::string term = j.at("termination").get<std::string>();
    if (term == "Aborted") {
      r.aborted = true;
    } else {
      r.termination = TerminationFromName(term);
    }
    if (j.contains("train_players")) r.train_players = j["train_players"].get<std::vector<int>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed game record: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(e.what());
  }
  if (r.rewards.size() != r.moves.size()) throw FormatError("rewards and actions differ in length");
  return r;
}

namespace {

GameState ReplayImpl(const GameRecord& record,
                     const std::function<void(const GameState&, const RecordedMove&)>& fn) {
  GameState state = [&] {
    try {
      return GameState::FromDeckOrder(MakeConfig(record.config), record.deck);
    } catch (const ConfigError& e) {
      throw FormatError(std::string("unreplayable record: ") + e.what());
    }
  }();
  for (size_t i = 0; i < record.moves.size(); ++i) {
    const RecordedMove& m = record.moves[i];
    if (m.player != state.active_player()) {
      throw FormatError("move " + std::to_string(i) + " made out of turn");
    }
    if (fn) fn(state, m);
    Action a;
    try {
      a = Action::FromIndex(record.config, m.action);
    } catch (const UsageError& e) {
      throw FormatError("move " + std::to_string(i) + ": " + e.what());
    }
    StepOutcome out;
    try {
      out = state.Apply(a);
    } catch (const IllegalActionError& e) {
      throw FormatError("move " + std::to_string(i) + ": " + e.what());
    }
    if (out.reward != record.rewards[i]) {
      throw FormatError("move " + std::to_string(i) + ": recorded reward differs from replay");
    }
  }
  return state;
}

}  // namespace

void ReplayWith(const GameRecord& record,
                const std::function<void(const GameState&, const RecordedMove&)>& fn) {
  ReplayImpl(record, fn);
}

GameState Replay(const GameRecord& record) {
  GameState last = ReplayImpl(record, nullptr);
  if (!record.aborted) {
    if (last.status().kind != record.termination) {
      throw FormatError("recorded termination differs from replay");
    }
    if (last.status().final_score != record.final_score) {
      throw FormatError("recorded final score differs from replay");
    }
  }
  return last;
}

Card PermuteCard(Card c, std::span<const int> perm) {
  if (!c.valid()) return c;
  return Card{static_cast<int8_t>(perm[c.color]), c.rank};
}

Action PermuteAction(Action a, std::span<const int> perm) {
  if (a.type == Action::Type::kHintColor) a.value = static_cast<int8_t>(perm[a.value]);
  return a;
}

std::vector<int> InversePermutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = static_cast<int>(i);
  return inv;
}

GameRecord ApplyColorPermutation(const GameRecord& record, std::span<const int> perm) {
  const int n = record.config.colors;
  if (static_cast<int>(perm.size()) != n) throw UsageError("permutation has the wrong length");
  std::vector<bool> hit(n, false);
  for (int v : perm) {
    if (v < 0 || v >= n || hit[v]) throw UsageError("color map is not a bijection");
    hit[v] = true;
  }
  GameRecord out = record;
  for (Card& c : out.deck) c = PermuteCard(c, perm);
  for (RecordedMove& m : out.moves) {
    m.action = PermuteAction(Action::FromIndex(record.config, m.action), perm).ToIndex(record.config);
  }
  return out;
}

GameRecord BeginRecord(const GameState& fresh_state, uint64_t seed) {
  if (fresh_state.turn() != 0) throw UsageError("BeginRecord needs a freshly dealt state");
  GameRecord r;
  r.config = fresh_state.config();
  r.seed = seed;
  for (int p = 0; p < kNumPlayers; ++p) {
    const auto& h = fresh_state.hand(p);
    r.deck.insert(r.deck.end(), h.begin(), h.end());
  }
  const auto rest = fresh_state.RemainingDeck();
  r.deck.insert(r.deck.end(), rest.begin(), rest.end());
  return r;
}

void RecordStep(GameRecord& record, int player, Action a, const StepOutcome& out,
                std::optional<double> lambda_label) {
  record.moves.push_back({player, a.ToIndex(record.config), lambda_label});
  record.rewards.push_back(out.reward);
  if (out.status.terminal()) {
    record.termination = out.status.kind;
    record.final_score = out.status.final_score;
  }
}

}  // namespace pikl::hanabi
