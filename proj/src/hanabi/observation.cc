#include "pikl/hanabi/observation.h"

namespace pikl::hanabi {

namespace {

nlohmann::json CardJson(Card c) { return {{"color", c.color}, {"rank", c.rank}}; }

nlohmann::json KnowledgeJson(const CardKnowledge& k, const GameConfig& cfg) {
  nlohmann::json colors = nlohmann::json::array();
  nlohmann::json ranks = nlohmann::json::array();
  for (int c = 0; c < cfg.colors; ++c) {
    if ((k.colors >> c) & 1u) colors.push_back(c);
  }
  for (int r = 0; r < cfg.NumRanks(); ++r) {
    if ((k.ranks >> r) & 1u) ranks.push_back(r);
  }
  return {{"possible_colors", colors},
          {"possible_ranks", ranks},
          {"color_hinted", k.color_hinted},
          {"rank_hinted", k.rank_hinted}};
}

inline void Mix(uint64_t& h, uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
}

}  // namespace

Observation Observe(const GameState& state, int player) {
  Observation o;
  o.config = state.config_ptr();
  o.observer = player;
  o.current_player = state.active_player();
  o.turn = state.turn();
  o.fireworks = state.fireworks();
  o.hint_tokens = state.hint_tokens();
  o.lives = state.lives();
  o.score = state.score();
  o.deck_size = state.deck_size();
  o.final_turns_remaining = state.final_turns_remaining();
  o.discards = state.discard_counts();
  o.own_knowledge = state.knowledge(player);
  o.partner_knowledge = state.knowledge(1 - player);
  o.partner_hand = state.hand(1 - player);
  o.last_move = state.last_move();
  o.status = state.status();
  if (!state.terminal() && state.active_player() == player) o.legal_mask = state.LegalMask();
  return o;
}

std::vector<Action> Observation::LegalActions() const {
  std::vector<Action> out;
  for (int i = 0; i < config->NumActions(); ++i) {
    if ((legal_mask >> i) & 1ULL) out.push_back(Action::FromIndex(*config, i));
  }
  return out;
}

bool Observation::operator==(const Observation& o) const {
  return *config == *o.config && observer == o.observer &&
         current_player == o.current_player && turn == o.turn && fireworks == o.fireworks &&
         hint_tokens == o.hint_tokens && lives == o.lives && score == o.score &&
         deck_size == o.deck_size && final_turns_remaining == o.final_turns_remaining &&
         discards == o.discards && own_knowledge == o.own_knowledge &&
         partner_knowledge == o.partner_knowledge && partner_hand == o.partner_hand &&
         last_move == o.last_move && legal_mask == o.legal_mask && status == o.status;
}

uint64_t Observation::Hash() const {
  uint64_t h = config->Hash();
  Mix(h, static_cast<uint64_t>(observer));
  Mix(h, static_cast<uint64_t>(current_player));
  Mix(h, static_cast<uint64_t>(turn));
  for (int c = 0; c < config->colors; ++c) Mix(h, static_cast<uint64_t>(fireworks[c]));
  Mix(h, static_cast<uint64_t>(hint_tokens));
  Mix(h, static_cast<uint64_t>(lives));
  Mix(h, static_cast<uint64_t>(deck_size));
  Mix(h, static_cast<uint64_t>(final_turns_remaining + 1));
  for (int t = 0; t < config->NumCardTypes(); ++t) Mix(h, discards[t]);
  for (const auto* ks : {&own_knowledge, &partner_knowledge}) {
    Mix(h, ks->size());
    for (const auto& k : *ks) {
      Mix(h, k.colors | (k.ranks << 8) | (k.color_hinted << 16) | (k.rank_hinted << 17));
    }
  }
  for (const Card& c : partner_hand) Mix(h, static_cast<uint64_t>(c.Index(config->NumRanks())));
  if (last_move) {
    const MoveInfo& m = *last_move;
    Mix(h, static_cast<uint64_t>(m.player + 1));
    Mix(h, static_cast<uint64_t>(m.action.ToIndex(*config)));
    Mix(h, static_cast<uint64_t>(m.revealed.valid() ? m.revealed.Index(config->NumRanks()) + 1 : 0));
    Mix(h, m.success | (m.drew << 1) | (m.hinted_slots << 2));
  }
  Mix(h, legal_mask);
  Mix(h, static_cast<uint64_t>(status.kind));
  return h;
}

nlohmann::json Observation::ToJson() const {
  const GameConfig& cfg = *config;
  nlohmann::json j;
  j["observer"] = observer;
  j["current_player"] = current_player;
  j["turn"] = turn;
  j["fireworks"] = std::vector<int>(fireworks.begin(), fireworks.begin() + cfg.colors);
  j["hint_tokens"] = hint_tokens;
  j["lives"] = lives;
  j["score"] = score;
  j["deck_size"] = deck_size;
  j["final_turns_remaining"] = final_turns_remaining;
  nlohmann::json discard_pile = nlohmann::json::array();
  for (int t = 0; t < cfg.NumCardTypes(); ++t) {
    if (discards[t] == 0) continue;
    nlohmann::json entry = CardJson(Card::FromIndex(t, cfg.NumRanks()));
    entry["count"] = discards[t];
    discard_pile.push_back(entry);
  }
  j["discards"] = discard_pile;
  nlohmann::json own = nlohmann::json::array();
  for (const auto& k : own_knowledge) own.push_back(KnowledgeJson(k, cfg));
  j["own_knowledge"] = own;
  nlohmann::json partner = nlohmann::json::array();
  for (size_t s = 0; s < partner_hand.size(); ++s) {
    nlohmann::json slot = CardJson(partner_hand[s]);
    slot["knowledge"] = KnowledgeJson(partner_knowledge[s], cfg);
    partner.push_back(slot);
  }
  j["partner_hand"] = partner;
  if (last_move) {
    const MoveInfo& m = *last_move;
    nlohmann::json lm = {{"player", m.player}, {"action", ActionToJson(m.action)},
                         {"success", m.success}, {"drew", m.drew}};
    if (m.revealed.valid()) lm["revealed"] = CardJson(m.revealed);
    nlohmann::json slots = nlohmann::json::array();
    for (int s = 0; s < kMaxHandSize; ++s) {
      if ((m.hinted_slots >> s) & 1u) slots.push_back(s);
    }
    lm["hinted_slots"] = slots;
    j["last_move"] = lm;
  } else {
    j["last_move"] = nullptr;
  }
  j["status"] = TerminationName(status.kind);
  return j;
}

CardCounts PublicRemainingCounts(const Observation& obs) {
  const GameConfig& cfg = *obs.config;
  const int ranks = cfg.NumRanks();
  CardCounts counts = FullDeckCounts(cfg);
  for (int t = 0; t < cfg.NumCardTypes(); ++t) counts[t] -= obs.discards[t];
  for (int c = 0; c < cfg.colors; ++c) {
    for (int r = 0; r < obs.fireworks[c]; ++r) --counts[c * ranks + r];
  }
  return counts;
}

CardCounts UnseenCounts(const Observation& obs) {
  CardCounts counts = PublicRemainingCounts(obs);
  const int ranks = obs.config->NumRanks();
  for (const Card& c : obs.partner_hand) --counts[c.Index(ranks)];
  return counts;
}

bool IsDead(const Observation& obs, Card c) {
  if (obs.fireworks[c.color] > c.rank) return true;
  const GameConfig& cfg = *obs.config;
  const int ranks = cfg.NumRanks();
  for (int r = obs.fireworks[c.color]; r < c.rank; ++r) {
    if (obs.discards[c.color * ranks + r] >= cfg.rank_counts[r]) return true;
  }
  return false;
}

}  // namespace pikl::hanabi
