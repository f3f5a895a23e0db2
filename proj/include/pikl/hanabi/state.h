#ifndef PIKL_HANABI_STATE_H_
#define PIKL_HANABI_STATE_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pikl/hanabi/game.h"

namespace pikl::hanabi {

// What a slot's holder can still believe about it, from hints alone.
struct CardKnowledge {
  uint8_t colors = 0;  // bit c set: color c not ruled out
  uint8_t ranks = 0;   // bit r set: rank r not ruled out
  bool color_hinted = false;  // touched by a color hint
  bool rank_hinted = false;   // touched by a rank hint

  static CardKnowledge Unknown(const GameConfig& config) {
    return {static_cast<uint8_t>((1u << config.colors) - 1),
            static_cast<uint8_t>((1u << config.NumRanks()) - 1), false, false};
  }
  bool Allows(Card c) const {
    return ((colors >> c.color) & 1u) && ((ranks >> c.rank) & 1u);
  }
  bool Clued() const { return color_hinted || rank_hinted; }
  bool operator==(const CardKnowledge&) const = default;
};

enum class Termination : uint8_t {
  kOngoing,
  kPerfectScore,
  kLivesExhausted,
  kDeckExhaustedFinalTurnsDone,
};

std::string TerminationName(Termination t);
Termination TerminationFromName(const std::string& name);

struct TerminationStatus {
  Termination kind = Termination::kOngoing;
  int final_score = 0;  // 0 whenever kind == kLivesExhausted

  bool terminal() const { return kind != Termination::kOngoing; }
  bool operator==(const TerminationStatus&) const = default;
};

// Public outcome of the most recent move.
struct MoveInfo {
  int player = -1;
  Action action;
  Card revealed;           // played/discarded card; invalid for hints
  bool success = false;    // successful play
  uint8_t hinted_slots = 0;  // bit s: slot s of the recipient matched the hint
  bool drew = false;       // actor drew a replacement card

  bool operator==(const MoveInfo&) const = default;
};

struct StepOutcome {
  int reward = 0;
  TerminationStatus status;
};

// The full hidden state of a two-player game. Hands are ordered oldest card
// first; the replacement card is appended at the end.
class GameState {
 public:
  // Throws ConfigError on an invalid config.
  static GameState NewGame(ConfigPtr config, uint64_t seed);
  // `deck_order` lists the whole deck top card first; dealing takes
  // hand_size cards for seat 0, then seat 1, then draws continue in order.
  static GameState FromDeckOrder(ConfigPtr config, std::span<const Card> deck_order);

  // Builds a simulator state from one seat's view plus a completion of the
  // hidden cards: `own_hand` for the observer, `remaining_deck` top first.
  static GameState FromView(const struct Observation& view, std::span<const Card> own_hand,
                            std::span<const Card> remaining_deck);

  const GameConfig& config() const { return *config_; }
  const ConfigPtr& config_ptr() const { return config_; }

  int active_player() const { return active_; }
  int hint_tokens() const { return hint_tokens_; }
  int lives() const { return lives_; }
  int score() const { return score_; }
  int turn() const { return turn_; }
  int deck_size() const { return static_cast<int>(deck_.size()); }
  int final_turns_remaining() const { return final_turns_remaining_; }
  int firework(int color) const { return fireworks_[color]; }
  const std::array<int8_t, kMaxColors>& fireworks() const { return fireworks_; }
  const CardCounts& discard_counts() const { return discards_; }
  const std::vector<Card>& hand(int player) const { return hands_[player]; }
  const std::vector<CardKnowledge>& knowledge(int player) const { return knowledge_[player]; }
  const std::optional<MoveInfo>& last_move() const { return last_move_; }
  // Remaining deck, next card to draw first.
  std::vector<Card> RemainingDeck() const { return {deck_.rbegin(), deck_.rend()}; }

  const TerminationStatus& status() const { return status_; }
  bool terminal() const { return status_.terminal(); }

  bool IsPlayable(Card c) const { return fireworks_[c.color] == c.rank; }

  // Bit i set iff canonical action i is legal for the active player.
  // Zero for terminal states.
  uint64_t LegalMask() const;
  bool IsLegal(Action a) const;
  // Throws UsageError if terminal or `player` is not active.
  std::vector<Action> LegalActions(int player) const;

  // Throws IllegalActionError (state unchanged) if `a` is not legal.
  StepOutcome Apply(Action a);

  // Invariant checks, used by fuzz tests and the self-test. Empty when fine.
  std::string CheckInvariants() const;

 private:
  explicit GameState(ConfigPtr config);
  void Deal();
  void Draw(int player);
  void RemoveFromHand(int player, int slot);

  ConfigPtr config_;
  std::vector<Card> deck_;  // next card at the back
  std::array<std::vector<Card>, kNumPlayers> hands_;
  std::array<std::vector<CardKnowledge>, kNumPlayers> knowledge_;
  std::array<int8_t, kMaxColors> fireworks_{};
  CardCounts discards_{};
  int hint_tokens_ = 0;
  int lives_ = 0;
  int score_ = 0;
  int active_ = 0;
  int turn_ = 0;
  int final_turns_remaining_ = -1;  // -1 until the deck runs out
  std::optional<MoveInfo> last_move_;
  TerminationStatus status_;
};

struct StepResult {
  GameState state;
  int reward = 0;
  TerminationStatus status;
};

// Value-semantics wrappers over GameState.
GameState NewGame(const GameConfig& config, uint64_t seed);
std::vector<Action> LegalActions(const GameState& state, int player);
StepResult ApplyAction(const GameState& state, Action action);

}  // namespace pikl::hanabi

#endif  // PIKL_HANABI_STATE_H_
