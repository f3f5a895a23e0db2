#include "pikl/hanabi/state.h"

#include <algorithm>
#include <sstream>

#include "pikl/errors.h"
#include "pikl/hanabi/observation.h"
#include "pikl/rng.h"

namespace pikl::hanabi {

std::string TerminationName(Termination t) {
  switch (t) {
    case Termination::kOngoing: return "Ongoing";
    case Termination::kPerfectScore: return "PerfectScore";
    case Termination::kLivesExhausted: return "LivesExhausted";
    case Termination::kDeckExhaustedFinalTurnsDone: return "DeckExhaustedFinalTurnsDone";
  }
  return "Unknown";
}

Termination TerminationFromName(const std::string& name) {
  for (Termination t : {Termination::kOngoing, Termination::kPerfectScore,
                        Termination::kLivesExhausted,
                        Termination::kDeckExhaustedFinalTurnsDone}) {
    if (TerminationName(t) == name) return t;
  }
  throw FormatError("unknown termination: " + name);
}

GameState::GameState(ConfigPtr config) : config_(std::move(config)) {
  hint_tokens_ = config_->max_hint_tokens;
  lives_ = config_->max_lives;
}

GameState GameState::NewGame(ConfigPtr config, uint64_t seed) {
  config->Validate();
  std::vector<Card> deck = OrderedDeck(*config);
  Rng rng(seed);
  rng.Shuffle(std::span<Card>(deck));
  return FromDeckOrder(std::move(config), deck);
}

GameState GameState::FromDeckOrder(ConfigPtr config, std::span<const Card> deck_order) {
  config->Validate();
  std::vector<Card> sorted(deck_order.begin(), deck_order.end());
  std::vector<Card> expected = OrderedDeck(*config);
  std::sort(sorted.begin(), sorted.end());
  std::sort(expected.begin(), expected.end());
  if (sorted != expected) throw ConfigError("deck order is not a permutation of the configured deck");
  GameState s(std::move(config));
  s.deck_.assign(deck_order.rbegin(), deck_order.rend());
  s.Deal();
  return s;
}

GameState GameState::FromView(const Observation& view, std::span<const Card> own_hand,
                              std::span<const Card> remaining_deck) {
  if (static_cast<int>(own_hand.size()) != view.own_hand_size()) {
    throw UsageError("own hand size does not match the view");
  }
  if (static_cast<int>(remaining_deck.size()) != view.deck_size) {
    throw UsageError("remaining deck size does not match the view");
  }
  GameState s(view.config);
  const int me = view.observer;
  const int other = view.partner();
  s.deck_.assign(remaining_deck.rbegin(), remaining_deck.rend());
  s.hands_[me].assign(own_hand.begin(), own_hand.end());
  s.hands_[other] = view.partner_hand;
  s.knowledge_[me] = view.own_knowledge;
  s.knowledge_[other] = view.partner_knowledge;
  s.fireworks_ = view.fireworks;
  s.discards_ = view.discards;
  s.hint_tokens_ = view.hint_tokens;
  s.lives_ = view.lives;
  s.score_ = view.score;
  s.active_ = view.current_player;
  s.turn_ = view.turn;
  s.final_turns_remaining_ = view.final_turns_remaining;
  s.last_move_ = view.last_move;
  s.status_ = view.status;
  return s;
}

void GameState::Deal() {
  for (int p = 0; p < kNumPlayers; ++p) {
    for (int i = 0; i < config_->hand_size; ++i) Draw(p);
  }
  if (deck_.empty()) final_turns_remaining_ = kNumPlayers;
}

void GameState::Draw(int player) {
  hands_[player].push_back(deck_.back());
  deck_.pop_back();
  knowledge_[player].push_back(CardKnowledge::Unknown(*config_));
}

void GameState::RemoveFromHand(int player, int slot) {
  hands_[player].erase(hands_[player].begin() + slot);
  knowledge_[player].erase(knowledge_[player].begin() + slot);
}

uint64_t GameState::LegalMask() const {
  if (terminal()) return 0;
  const GameConfig& cfg = *config_;
  const int h = cfg.hand_size;
  const auto& own = hands_[active_];
  const auto& other = hands_[1 - active_];
  uint64_t mask = 0;
  const int n = static_cast<int>(own.size());
  for (int s = 0; s < n; ++s) mask |= 1ULL << s;
  if (hint_tokens_ < cfg.max_hint_tokens || cfg.allow_discard_at_max_tokens) {
    for (int s = 0; s < n; ++s) mask |= 1ULL << (h + s);
  }
  if (hint_tokens_ > 0) {
    for (const Card& c : other) {
      mask |= 1ULL << (2 * h + c.color);
      mask |= 1ULL << (2 * h + cfg.colors + c.rank);
    }
  }
  return mask;
}

bool GameState::IsLegal(Action a) const {
  const int idx = a.ToIndex(*config_);
  if (idx < 0 || idx >= config_->NumActions()) return false;
  if (!a.IsHint() && (a.value < 0 || a.value >= config_->hand_size)) return false;
  if (a.type == Action::Type::kHintColor && (a.value < 0 || a.value >= config_->colors)) return false;
  if (a.type == Action::Type::kHintRank && (a.value < 0 || a.value >= config_->NumRanks())) return false;
  return (LegalMask() >> idx) & 1ULL;
}

std::vector<Action> GameState::LegalActions(int player) const {
  if (terminal()) throw UsageError("legal_actions called on a terminal state");
  if (player != active_) {
    throw UsageError("player " + std::to_string(player) + " is not the active player");
  }
  std::vector<Action> out;
  const uint64_t mask = LegalMask();
  for (int i = 0; i < config_->NumActions(); ++i) {
    if ((mask >> i) & 1ULL) out.push_back(Action::FromIndex(*config_, i));
  }
  return out;
}

StepOutcome GameState::Apply(Action a) {
  if (terminal()) throw IllegalActionError("game is over; " + ActionString(a) + " rejected");
  if (!IsLegal(a)) {
    std::ostringstream msg;
    msg << ActionString(a) << " is illegal for player " << active_ << " (tokens "
        << hint_tokens_ << "/" << config_->max_hint_tokens << ", hand size "
        << hands_[active_].size() << ")";
    throw IllegalActionError(msg.str());
  }
  const GameConfig& cfg = *config_;
  const bool deck_empty_before = deck_.empty();
  MoveInfo move;
  move.player = active_;
  move.action = a;
  StepOutcome out;

  switch (a.type) {
    case Action::Type::kPlay: {
      const Card card = hands_[active_][a.value];
      RemoveFromHand(active_, a.value);
      move.revealed = card;
      if (IsPlayable(card)) {
        ++fireworks_[card.color];
        ++score_;
        out.reward = 1;
        move.success = true;
        if (fireworks_[card.color] == cfg.NumRanks() && hint_tokens_ < cfg.max_hint_tokens) {
          ++hint_tokens_;
        }
      } else {
        --lives_;
        ++discards_[card.Index(cfg.NumRanks())];
      }
      if (!deck_.empty()) {
        Draw(active_);
        move.drew = true;
      }
      break;
    }
    case Action::Type::kDiscard: {
      const Card card = hands_[active_][a.value];
      RemoveFromHand(active_, a.value);
      move.revealed = card;
      ++discards_[card.Index(cfg.NumRanks())];
      hint_tokens_ = std::min(hint_tokens_ + 1, cfg.max_hint_tokens);
      if (!deck_.empty()) {
        Draw(active_);
        move.drew = true;
      }
      break;
    }
    case Action::Type::kHintColor:
    case Action::Type::kHintRank: {
      --hint_tokens_;
      const int target = 1 - active_;
      auto& hand = hands_[target];
      auto& know = knowledge_[target];
      const bool by_color = a.type == Action::Type::kHintColor;
      for (size_t s = 0; s < hand.size(); ++s) {
        const bool match = by_color ? hand[s].color == a.value : hand[s].rank == a.value;
        const auto bit = static_cast<uint8_t>(1u << a.value);
        if (match) {
          move.hinted_slots |= static_cast<uint8_t>(1u << s);
          if (by_color) {
            know[s].colors &= bit;
            know[s].color_hinted = true;
          } else {
            know[s].ranks &= bit;
            know[s].rank_hinted = true;
          }
        } else if (by_color) {
          know[s].colors &= static_cast<uint8_t>(~bit);
        } else {
          know[s].ranks &= static_cast<uint8_t>(~bit);
        }
      }
      break;
    }
  }

  ++turn_;
  if (final_turns_remaining_ >= 0) {
    --final_turns_remaining_;
  } else if (!deck_empty_before && deck_.empty()) {
    final_turns_remaining_ = kNumPlayers;
  }
  last_move_ = move;

  if (lives_ == 0) {
    status_ = {Termination::kLivesExhausted, 0};
    out.reward -= score_;
  } else if (score_ == cfg.MaxScore()) {
    status_ = {Termination::kPerfectScore, score_};
  } else if (final_turns_remaining_ == 0) {
    status_ = {Termination::kDeckExhaustedFinalTurnsDone, score_};
  }
  active_ = 1 - active_;
  out.status = status_;
  return out;
}

std::string GameState::CheckInvariants() const {
  const GameConfig& cfg = *config_;
  const int ranks = cfg.NumRanks();
  CardCounts seen{};
  for (const Card& c : deck_) ++seen[c.Index(ranks)];
  for (const auto& hand : hands_) {
    for (const Card& c : hand) ++seen[c.Index(ranks)];
  }
  for (int t = 0; t < cfg.NumCardTypes(); ++t) seen[t] += discards_[t];
  int firework_sum = 0;
  for (int c = 0; c < cfg.colors; ++c) {
    if (fireworks_[c] < 0 || fireworks_[c] > ranks) return "firework out of range";
    firework_sum += fireworks_[c];
    for (int r = 0; r < fireworks_[c]; ++r) ++seen[c * ranks + r];
  }
  if (seen != FullDeckCounts(cfg)) return "card conservation violated";
  if (hint_tokens_ < 0 || hint_tokens_ > cfg.max_hint_tokens) return "hint tokens out of bounds";
  if (lives_ < 0 || lives_ > cfg.max_lives) return "lives out of bounds";
  if (firework_sum != score_) return "score differs from firework sum";
  for (int p = 0; p < kNumPlayers; ++p) {
    if (hands_[p].size() != knowledge_[p].size()) return "knowledge/hand size mismatch";
    if (static_cast<int>(hands_[p].size()) > cfg.hand_size) return "hand too large";
    for (size_t s = 0; s < hands_[p].size(); ++s) {
      if (!knowledge_[p][s].Allows(hands_[p][s])) return "knowledge excludes the true card";
    }
  }
  if (status_.kind == Termination::kLivesExhausted && status_.final_score != 0) {
    return "lost game with non-zero final score";
  }
  return {};
}

GameState NewGame(const GameConfig& config, uint64_t seed) {
  return GameState::NewGame(MakeConfig(config), seed);
}

std::vector<Action> LegalActions(const GameState& state, int player) {
  return state.LegalActions(player);
}

StepResult ApplyAction(const GameState& state, Action action) {
  StepResult r{state, 0, {}};
  const StepOutcome out = r.state.Apply(action);
  r.reward = out.reward;
  r.status = out.status;
  return r;
}

}  // namespace pikl::hanabi
