#include "pikl/hanabi/game.h"

#include <numeric>
#include <string>

#include "pikl/errors.h"

namespace pikl::hanabi {

GameConfig GameConfig::Standard() { return GameConfig{}; }

GameConfig GameConfig::Mini(int colors, int hand_size) {
  GameConfig c;
  c.colors = colors;
  c.hand_size = hand_size;
  return c;
}

int GameConfig::CardsPerColor() const {
  return std::accumulate(rank_counts.begin(), rank_counts.end(), 0);
}

void GameConfig::Validate() const {
  auto fail = [](const std::string& why) { throw ConfigError("invalid game config: " + why); };
  if (num_players != kNumPlayers) fail("only two-player games are supported");
  if (colors < 1 || colors > kMaxColors) fail("colors must be in [1, 5]");
  if (rank_counts.empty() || NumRanks() > kMaxRanks) fail("need 1 to 5 ranks");
  for (int n : rank_counts) {
    if (n < 1) fail("every rank count must be >= 1");
  }
  if (hand_size < 1 || hand_size > kMaxHandSize) fail("hand_size must be in [1, 8]");
  if (max_hint_tokens < 1) fail("max_hint_tokens must be >= 1");
  if (max_lives < 1) fail("max_lives must be >= 1");
  if (DeckSize() < num_players * hand_size) {
    fail("deck of " + std::to_string(DeckSize()) + " cards cannot deal " +
         std::to_string(num_players) + " hands of " + std::to_string(hand_size));
  }
}

int GameConfig::MaxGameLength() const {
  // Plays/discards: one per deck card plus one final move per seat. Hints:
  // the initial tokens plus one per discard plus one per completed suit.
  const int after_deal = DeckSize() - num_players * hand_size;
  const int play_discard = after_deal + num_players;
  return 2 * play_discard + max_hint_tokens + colors;
}

nlohmann::json GameConfig::ToJson() const {
  return {{"num_players", num_players},
          {"colors", colors},
          {"rank_counts", rank_counts},
          {"hand_size", hand_size},
          {"max_hint_tokens", max_hint_tokens},
          {"max_lives", max_lives},
          {"allow_discard_at_max_tokens", allow_discard_at_max_tokens}};
}

GameConfig GameConfig::FromJson(const nlohmann::json& j) {
  GameConfig c;
  try {
    c.num_players = j.value("num_players", c.num_players);
    c.colors = j.value("colors", c.colors);
    c.rank_counts = j.value("rank_counts", c.rank_counts);
    c.hand_size = j.value("hand_size", c.hand_size);
    c.max_hint_tokens = j.value("max_hint_tokens", c.max_hint_tokens);
    c.max_lives = j.value("max_lives", c.max_lives);
    c.allow_discard_at_max_tokens =
        j.value("allow_discard_at_max_tokens", c.allow_discard_at_max_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed game config: ") + e.what());
  }
  c.Validate();
  return c;
}

uint64_t GameConfig::Hash() const {
  const std::string s = ToJson().dump();
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

ConfigPtr MakeConfig(GameConfig config) {
  config.Validate();
  return std::make_shared<const GameConfig>(std::move(config));
}

std::string CardString(Card c) {
  if (!c.valid()) return "??";
  static constexpr char kColorChars[] = "RYGWB";
  return std::string(1, kColorChars[c.color]) + std::to_string(c.rank + 1);
}

CardCounts FullDeckCounts(const GameConfig& config) {
  CardCounts counts{};
  const int ranks = config.NumRanks();
  for (int c = 0; c < config.colors; ++c) {
    for (int r = 0; r < ranks; ++r) counts[c * ranks + r] = config.rank_counts[r];
  }
  return counts;
}

std::vector<Card> OrderedDeck(const GameConfig& config) {
  std::vector<Card> deck;
  deck.reserve(config.DeckSize());
  for (int c = 0; c < config.colors; ++c) {
    for (int r = 0; r < config.NumRanks(); ++r) {
      for (int k = 0; k < config.rank_counts[r]; ++k) {
        deck.push_back(Card{static_cast<int8_t>(c), static_cast<int8_t>(r)});
      }
    }
  }
  return deck;
}

int Action::ToIndex(const GameConfig& config) const {
  const int h = config.hand_size;
  switch (type) {
    case Type::kPlay: return value;
    case Type::kDiscard: return h + value;
    case Type::kHintColor: return 2 * h + value;
    case Type::kHintRank: return 2 * h + config.colors + value;
  }
  return -1;
}

Action Action::FromIndex(const GameConfig& config, int index) {
  const int h = config.hand_size;
  if (index < 0 || index >= config.NumActions()) {
    throw UsageError("action index " + std::to_string(index) + " out of range");
  }
  if (index < h) return Play(index);
  if (index < 2 * h) return Discard(index - h);
  if (index < 2 * h + config.colors) return HintColor(index - 2 * h);
  return HintRank(index - 2 * h - config.colors);
}

std::string ActionString(Action a) {
  switch (a.type) {
    case Action::Type::kPlay: return "Play(" + std::to_string(a.value) + ")";
    case Action::Type::kDiscard: return "Discard(" + std::to_string(a.value) + ")";
    case Action::Type::kHintColor: return "HintColor(" + std::to_string(a.value) + ")";
    case Action::Type::kHintRank: return "HintRank(" + std::to_string(a.value) + ")";
  }
  return "?";
}

nlohmann::json ActionToJson(Action a) {
  switch (a.type) {
    case Action::Type::kPlay: return {{"Play", a.value}};
    case Action::Type::kDiscard: return {{"Discard", a.value}};
    case Action::Type::kHintColor: return {{"HintColor", a.value}};
    case Action::Type::kHintRank: return {{"HintRank", a.value}};
  }
  return nullptr;
}

Action ActionFromJson(const GameConfig& config, const nlohmann::json& j) {
  if (j.is_number_integer()) return Action::FromIndex(config, j.get<int>());
  if (!j.is_object() || j.size() != 1 || !j.begin().value().is_number_integer()) {
    throw FormatError("malformed action: " + j.dump());
  }
  const std::string key = j.begin().key();
  const int v = j.begin().value().get<int>();
  Action a;
  if (key == "Play") {
    a = Action::Play(v);
  } else if (key == "Discard") {
    a = Action::Discard(v);
  } else if (key == "HintColor") {
    a = Action::HintColor(v);
  } else if (key == "HintRank") {
    a = Action::HintRank(v);
  } else {
    throw FormatError("unknown action kind: " + key);
  }
  const int idx = a.ToIndex(config);
  const bool in_range = a.IsHint() ? (a.type == Action::Type::kHintColor
                                          ? v >= 0 && v < config.colors
                                          : v >= 0 && v < config.NumRanks())
                                   : v >= 0 && v < config.hand_size;
  if (!in_range || idx < 0 || idx >= config.NumActions()) {
    throw FormatError("action out of range: " + j.dump());
  }
  return a;
}

}  // namespace pikl::hanabi
