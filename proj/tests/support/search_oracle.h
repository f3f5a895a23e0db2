#ifndef PIKL_TESTS_SEARCH_ORACLE_H_
#define PIKL_TESTS_SEARCH_ORACLE_H_

// Crafted positions, a peaked stand-in policy, and the exhaustive rollout
// expectation used to check Q estimates.

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <stdexcept>

#include "belief_oracle.h"
#include "pikl/belief/belief.h"
#include "pikl/search/search.h"
#include "test_util.h"

namespace pikl::testing {

using belief::Hand;
using hanabi::AohView;
using hanabi::CardKnowledge;
using hanabi::GameConfig;
using hanabi::GameState;
using hanabi::Observation;
using search::SearchParams;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Puts `main_mass` on the highest-ranked legal action in `preference` and
// spreads the rest uniformly over the other legal actions. With `base`, that
// only happens on turn `only_turn` and `base` decides everywhere else.
class PeakedPolicy : public policy::Policy {
 public:
  PeakedPolicy(GameConfig cfg, std::vector<int> preference, double main_mass,
               policy::PolicyPtr base = nullptr, int only_turn = -1)
      : cfg_(cfg), pref_(std::move(preference)), mass_(main_mass), base_(std::move(base)),
        only_turn_(only_turn) {}
  std::string Name() const override { return "peaked"; }
  const GameConfig& config() const override { return cfg_; }
  policy::ActionProbs Probs(AohView aoh, std::optional<double> lambda) const override {
    if (base_ && aoh.back().turn != only_turn_) return base_->Probs(aoh, lambda);
    const uint64_t mask = aoh.back().legal_mask;
    int main = -1;
    for (int a : pref_) {
      if ((mask >> a) & 1u) {
        main = a;
        break;
      }
    }
    if (main < 0) main = std::countr_zero(mask);
    const int others = std::popcount(mask) - 1;
    policy::ActionProbs p(cfg_.NumActions(), 0.0);
    for (int a = 0; a < cfg_.NumActions(); ++a) {
      if ((mask >> a) & 1u) p[a] = others == 0 ? 1.0 : (1.0 - mass_) / others;
    }
    p[main] = others == 0 ? 1.0 : mass_;
    return p;
  }

 private:
  GameConfig cfg_;
  std::vector<int> pref_;
  double mass_;
  policy::PolicyPtr base_;
  int only_turn_;
};

inline CardKnowledge Known(Card c) {
  return {static_cast<uint8_t>(1u << c.color), static_cast<uint8_t>(1u << c.rank), true, true};
}

struct Craft {
  GameConfig cfg = GameConfig::Mini(2, 3);
  std::array<int8_t, hanabi::kMaxColors> fireworks{};
  std::vector<Card> discards;
  Hand mine;
  std::vector<CardKnowledge> my_knowledge;  // defaults to unknown
  std::vector<Card> partner;
  int lives = 3;
  int tokens = 4;
  int final_turns = -1;
};

// Seat 0 to move in the crafted position; the deck holds every card not
// placed elsewhere.
inline GameState Build(const Craft& c) {
  const auto cp = hanabi::MakeConfig(c.cfg);
  hanabi::CardCounts left = hanabi::FullDeckCounts(c.cfg);
  const int nr = c.cfg.NumRanks();
  auto take = [&](Card x) {
    if (left[x.Index(nr)] == 0) throw std::runtime_error("crafted position over-uses a card");
    --left[x.Index(nr)];
  };
  int score = 0;
  for (int col = 0; col < c.cfg.colors; ++col) {
    for (int r = 0; r < c.fireworks[col]; ++r) take(C(col, r));
    score += c.fireworks[col];
  }
  for (Card x : c.discards) take(x);
  for (Card x : c.mine) take(x);
  for (Card x : c.partner) take(x);
  std::vector<Card> deck;
  for (int t = 0; t < c.cfg.NumCardTypes(); ++t) {
    for (int k = 0; k < left[t]; ++k) deck.push_back(Card::FromIndex(t, nr));
  }
  Observation v;
  v.config = cp;
  v.observer = 0;
  v.current_player = 0;
  v.turn = 20;
  v.fireworks = c.fireworks;
  v.hint_tokens = c.tokens;
  v.lives = c.lives;
  v.score = score;
  v.deck_size = static_cast<int>(deck.size());
  v.final_turns_remaining = c.final_turns;
  for (Card x : c.discards) ++v.discards[x.Index(nr)];
  v.own_knowledge = c.my_knowledge;
  v.own_knowledge.resize(c.mine.size(), CardKnowledge::Unknown(c.cfg));
  v.partner_knowledge.assign(c.partner.size(), CardKnowledge::Unknown(c.cfg));
  v.partner_hand = c.partner;
  return GameState::FromView(v, c.mine, deck);
}

inline SearchParams Params(policy::PolicyPtr p, double lambda, int m) {
  SearchParams s;
  s.lambda = lambda;
  s.rollouts_M = m;
  s.partner_model = p;
  s.rollout_policy = p;
  s.anchor_policy = p;
  return s;
}
// Exact expected final-score delta of every legal action: sum over the
// brute-force posterior, then over every distinct order of the remaining
// deck, of a deterministic greedy rollout.
struct ExactQ {
  std::vector<double> mean, var;
};

inline ExactQ Exhaustive(const hanabi::GameRecord& rec, int moves, int me,
                  const policy::Policy& partner) {
  const GameConfig& cfg = rec.config;
  const int nr = cfg.NumRanks();
  const auto oracle = testing::BruteForcePosterior(rec, moves, me, partner);
  const Observation& now = oracle.aoh.back();
  ExactQ out;
  out.mean.assign(cfg.NumActions(), 0.0);
  out.var.assign(cfg.NumActions(), 0.0);
  std::vector<double> sq(cfg.NumActions(), 0.0);
  for (const auto& [key, w] : oracle.posterior) {
    Hand hand;
    for (int t : key) hand.push_back(Card::FromIndex(t, nr));
    hanabi::CardCounts unseen = hanabi::UnseenCounts(now);
    for (int t : key) --unseen[t];
    std::vector<int> rest;
    for (int t = 0; t < cfg.NumCardTypes(); ++t) {
      for (int k = 0; k < unseen[t]; ++k) rest.push_back(t);
    }
    std::vector<std::pair<std::vector<int>, double>> orders;
    double n_orders = 0;
    std::sort(rest.begin(), rest.end());
    do {
      orders.push_back({rest, 1.0});
      n_orders += 1;
    } while (std::next_permutation(rest.begin(), rest.end()));
    for (int a = 0; a < cfg.NumActions(); ++a) {
      if (!((now.legal_mask >> a) & 1u)) continue;
      for (const auto& [order, one] : orders) {
        std::vector<Card> deck;
        for (int t : order) deck.push_back(Card::FromIndex(t, nr));
        GameState s = GameState::FromView(now, hand, deck);
        double ret = s.Apply(Action::FromIndex(cfg, a)).reward;
        while (!s.terminal()) {
          const Observation v = hanabi::Observe(s, s.active_player());
          const auto p = partner.Probs(AohView(&v, 1), std::nullopt);
          int best = -1;
          for (int b = 0; b < cfg.NumActions(); ++b) {
            if (((v.legal_mask >> b) & 1u) && (best < 0 || p[b] > p[best])) best = b;
          }
          ret += s.Apply(Action::FromIndex(cfg, best)).reward;
        }
        const double weight = w / n_orders;
        out.mean[a] += weight * ret;
        sq[a] += weight * ret * ret;
      }
    }
  }
  for (int a = 0; a < cfg.NumActions(); ++a) {
    out.var[a] = std::max(0.0, sq[a] - out.mean[a] * out.mean[a]);
  }
  return out;
}

inline Craft LastLifeCraft() {
  Craft c;
  c.fireworks = {3, 3};
  c.mine = {C(0, 0), C(0, 3), C(1, 3)};
  c.my_knowledge = {Known(C(0, 0))};
  c.partner = {C(0, 4), C(1, 0), C(0, 1)};
  c.lives = 1;
  c.tokens = 4;
  return c;
}

}  // namespace pikl::testing

#endif  // PIKL_TESTS_SEARCH_ORACLE_H_
