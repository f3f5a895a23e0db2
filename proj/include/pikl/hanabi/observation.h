#ifndef PIKL_HANABI_OBSERVATION_H_
#define PIKL_HANABI_OBSERVATION_H_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pikl/hanabi/game.h"
#include "pikl/hanabi/state.h"

namespace pikl::hanabi {

// One seat's view of a state: every public component plus the partner's
// hand. The observer's own card identities are not part of this type.
struct Observation {
  ConfigPtr config;
  int observer = 0;
  int current_player = 0;
  int turn = 0;
  std::array<int8_t, kMaxColors> fireworks{};
  int hint_tokens = 0;
  int lives = 0;
  int score = 0;
  int deck_size = 0;
  int final_turns_remaining = -1;
  CardCounts discards{};
  std::vector<CardKnowledge> own_knowledge;
  std::vector<CardKnowledge> partner_knowledge;
  std::vector<Card> partner_hand;
  std::optional<MoveInfo> last_move;
  // Observer's legal actions; zero when it is not the observer's turn.
  uint64_t legal_mask = 0;
  TerminationStatus status;

  int partner() const { return 1 - observer; }
  bool my_turn() const { return current_player == observer && !status.terminal(); }
  int own_hand_size() const { return static_cast<int>(own_knowledge.size()); }
  std::vector<Action> LegalActions() const;

  // Wire/debug form. Contains no field for the observer's own cards.
  nlohmann::json ToJson() const;
  uint64_t Hash() const;

  bool operator==(const Observation& o) const;
};

Observation Observe(const GameState& state, int player);

// Observer-side count of every card not visible to the observer: the deck
// plus the observer's own hand.
CardCounts UnseenCounts(const Observation& obs);

// Copies that are not yet on the fireworks or in the discard pile.
CardCounts PublicRemainingCounts(const Observation& obs);

// A card can no longer score: its firework passed it, or a lower rank of its
// color is fully discarded.
bool IsDead(const Observation& obs, Card c);

// The ordered record of one seat's observations. Each entry after the first
// carries the move that produced it in `last_move`.
using AohView = std::span<const Observation>;

class ActionObservationHistory {
 public:
  ActionObservationHistory() = default;
  explicit ActionObservationHistory(int owner) : owner_(owner) {}

  int owner() const { return owner_; }
  void Push(Observation obs) { steps_.push_back(std::move(obs)); }
  const Observation& current() const { return steps_.back(); }
  AohView view() const { return steps_; }
  size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }

 private:
  int owner_ = 0;
  std::vector<Observation> steps_;
};

}  // namespace pikl::hanabi

#endif  // PIKL_HANABI_OBSERVATION_H_
