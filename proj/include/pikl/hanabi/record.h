#ifndef PIKL_HANABI_RECORD_H_
#define PIKL_HANABI_RECORD_H_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pikl/hanabi/game.h"
#include "pikl/hanabi/state.h"

namespace pikl::hanabi {

inline constexpr int kRecordSchemaVersion = 1;

struct RecordedMove {
  int player = 0;
  int action = 0;  // canonical index
  std::optional<double> lambda_label;

  bool operator==(const RecordedMove&) const = default;
};

// A complete, replayable game. The deck is stored explicitly (top card
// first) so replay does not depend on the PRNG.
struct GameRecord {
  GameConfig config;
  uint64_t seed = 0;
  std::vector<Card> deck;
  std::vector<RecordedMove> moves;
  std::vector<int> rewards;
  int final_score = 0;
  // kOngoing marks an aborted game.
  Termination termination = Termination::kOngoing;
  bool aborted = false;
  // Seats whose perspective is training data. Empty means both.
  std::vector<int> train_players;

  bool TrainsOn(int player) const;
  // μ label attached to `player`'s moves, if any.
  std::optional<double> LambdaLabel(int player) const;

  nlohmann::json ToJson() const;
  // Throws FormatError.
  static GameRecord FromJson(const nlohmann::json& j);

  bool operator==(const GameRecord&) const = default;
};

// Replays the record through the engine and checks rewards, score and
// termination against the stored values. Throws FormatError on mismatch.
GameState Replay(const GameRecord& record);

// Callback per move: (state before the move, move).
void ReplayWith(const GameRecord& record,
                const std::function<void(const GameState&, const RecordedMove&)>& fn);

// Relabels every color in the record through `perm` (perm[c] is the new
// index of color c). Throws UsageError if `perm` is not a bijection.
GameRecord ApplyColorPermutation(const GameRecord& record, std::span<const int> perm);

Action PermuteAction(Action a, std::span<const int> perm);
Card PermuteCard(Card c, std::span<const int> perm);
std::vector<int> InversePermutation(std::span<const int> perm);

// Starts a record for a fresh game; append with RecordStep.
GameRecord BeginRecord(const GameState& fresh_state, uint64_t seed);
void RecordStep(GameRecord& record, int player, Action a, const StepOutcome& out,
                std::optional<double> lambda_label = std::nullopt);

}  // namespace pikl::hanabi

#endif  // PIKL_HANABI_RECORD_H_
