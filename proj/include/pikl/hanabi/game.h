#ifndef PIKL_HANABI_GAME_H_
#define PIKL_HANABI_GAME_H_

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

namespace pikl::hanabi {

inline constexpr int kMaxColors = 5;
inline constexpr int kMaxRanks = 5;
inline constexpr int kMaxCardTypes = kMaxColors * kMaxRanks;
inline constexpr int kMaxHandSize = 8;
inline constexpr int kNumPlayers = 2;

// Rules parameterization. Colors and ranks are 0-based indices; rank r is
// the (r+1)-th card to be played on its firework.
struct GameConfig {
  int num_players = 2;
  int colors = 5;
  std::vector<int> rank_counts = {3, 2, 2, 2, 1};
  int hand_size = 5;
  int max_hint_tokens = 8;
  int max_lives = 3;
  // Hanab.Live forbids discarding with all hint tokens available.
  bool allow_discard_at_max_tokens = false;

  static GameConfig Standard();
  // Two colors by default; 20 cards with the standard rank multiset.
  static GameConfig Mini(int colors = 2, int hand_size = 4);

  // Throws ConfigError.
  void Validate() const;

  int NumRanks() const { return static_cast<int>(rank_counts.size()); }
  int NumCardTypes() const { return colors * NumRanks(); }
  int CardsPerColor() const;
  int DeckSize() const { return colors * CardsPerColor(); }
  int MaxScore() const { return colors * NumRanks(); }
  // Size of the canonical action index space.
  int NumActions() const { return 2 * hand_size + colors + NumRanks(); }
  // Upper bound on the number of moves in any game.
  int MaxGameLength() const;

  nlohmann::json ToJson() const;
  static GameConfig FromJson(const nlohmann::json& j);
  // FNV-1a over the canonical JSON dump.
  uint64_t Hash() const;

  bool operator==(const GameConfig&) const = default;
};

using ConfigPtr = std::shared_ptr<const GameConfig>;
ConfigPtr MakeConfig(GameConfig config);

struct Card {
  int8_t color = -1;
  int8_t rank = -1;

  bool valid() const { return color >= 0; }
  int Index(int num_ranks) const { return color * num_ranks + rank; }
  static Card FromIndex(int index, int num_ranks) {
    return Card{static_cast<int8_t>(index / num_ranks),
                static_cast<int8_t>(index % num_ranks)};
  }
  bool operator==(const Card&) const = default;
  auto operator<=>(const Card&) const = default;
};

// "R1"-style label: color letter then 1-based rank.
std::string CardString(Card c);

// Per-card-type counter, indexed by Card::Index.
using CardCounts = std::array<uint8_t, kMaxCardTypes>;

// Full multiset of the configured deck.
CardCounts FullDeckCounts(const GameConfig& config);

// Unshuffled deck, color-major.
std::vector<Card> OrderedDeck(const GameConfig& config);

// Actions are relative to the acting player; hints always target the other
// seat in two-player games.
//
// Canonical integer index: plays [0, H), discards [H, 2H), color hints
// [2H, 2H+C), rank hints [2H+C, 2H+C+R).
struct Action {
  enum class Type : uint8_t { kPlay, kDiscard, kHintColor, kHintRank };

  Type type = Type::kPlay;
  int8_t value = 0;  // slot, color or rank depending on type

  static Action Play(int slot) { return {Type::kPlay, static_cast<int8_t>(slot)}; }
  static Action Discard(int slot) { return {Type::kDiscard, static_cast<int8_t>(slot)}; }
  static Action HintColor(int color) { return {Type::kHintColor, static_cast<int8_t>(color)}; }
  static Action HintRank(int rank) { return {Type::kHintRank, static_cast<int8_t>(rank)}; }

  bool IsHint() const { return type == Type::kHintColor || type == Type::kHintRank; }

  int ToIndex(const GameConfig& config) const;
  static Action FromIndex(const GameConfig& config, int index);

  bool operator==(const Action&) const = default;
};

std::string ActionString(Action a);

// Wire form: {"Play":2}, {"Discard":0}, {"HintColor":1}, {"HintRank":0}.
nlohmann::json ActionToJson(Action a);
// Accepts the object form above or a canonical integer index.
Action ActionFromJson(const GameConfig& config, const nlohmann::json& j);

}  // namespace pikl::hanabi

#endif  // PIKL_HANABI_GAME_H_
