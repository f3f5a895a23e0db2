#ifndef PIKL_TESTS_TEST_UTIL_H_
#define PIKL_TESTS_TEST_UTIL_H_

#include <bit>
#include <cstdint>
#include <vector>

#include "pikl/hanabi/record.h"
#include "pikl/hanabi/state.h"
#include "pikl/hanabi/observation.h"
#include "pikl/policy/policy.h"
#include "pikl/rng.h"

namespace pikl::testing {

using hanabi::Action;
using hanabi::Card;

inline Card C(int color, int rank) {
  return Card{static_cast<int8_t>(color), static_cast<int8_t>(rank)};
}

// Uniformly random legal action for the active player.
inline Action RandomLegal(const hanabi::GameState& s, Rng& rng) {
  const uint64_t mask = s.LegalMask();
  int k = static_cast<int>(rng.UniformInt(static_cast<uint64_t>(std::popcount(mask))));
  for (int i = 0; i < 64; ++i) {
    if ((mask >> i) & 1ULL) {
      if (k-- == 0) return Action::FromIndex(s.config(), i);
    }
  }
  return Action::Play(0);
}

inline hanabi::GameRecord RandomGame(const hanabi::GameConfig& config, uint64_t seed) {
  hanabi::GameState s = hanabi::NewGame(config, seed);
  hanabi::GameRecord rec = hanabi::BeginRecord(s, seed);
  Rng rng(seed ^ 0xABCDEFULL);
  while (!s.terminal()) {
    const int p = s.active_player();
    const Action a = RandomLegal(s, rng);
    hanabi::RecordStep(rec, p, a, s.Apply(a));
  }
  return rec;
}

// Deck builder: the hands for seat 0 and seat 1, then the draw pile in
// order; any configured cards not named are appended in sorted order.
inline std::vector<Card> RiggedDeck(const hanabi::GameConfig& config,
                                    std::vector<Card> head) {
  std::vector<Card> rest = hanabi::OrderedDeck(config);
  for (const Card& c : head) {
    for (auto it = rest.begin(); it != rest.end(); ++it) {
      if (*it == c) {
        rest.erase(it);
        break;
      }
    }
  }
  head.insert(head.end(), rest.begin(), rest.end());
  return head;
}

// Self-play with a sampled action per turn; policies see only the current
// observation.
inline hanabi::GameRecord PlayWith(const hanabi::GameConfig& config, uint64_t seed,
                                   const policy::Policy& p0, const policy::Policy& p1,
                                   bool greedy = false) {
  hanabi::GameState s = hanabi::NewGame(config, seed);
  hanabi::GameRecord rec = hanabi::BeginRecord(s, seed);
  Rng rng(DeriveSeed(seed, 77));
  while (!s.terminal()) {
    const int p = s.active_player();
    const hanabi::Observation obs = hanabi::Observe(s, p);
    const Action a = policy::ChooseAction(p == 0 ? p0 : p1, hanabi::AohView(&obs, 1),
                                          std::nullopt, greedy, rng);
    hanabi::RecordStep(rec, p, a, s.Apply(a));
  }
  return rec;
}

// The acting seat's observation before every move of a record.
inline std::vector<hanabi::Observation> DecisionViews(const hanabi::GameRecord& rec) {
  std::vector<hanabi::Observation> out;
  hanabi::ReplayWith(rec, [&](const hanabi::GameState& s, const hanabi::RecordedMove& m) {
    out.push_back(hanabi::Observe(s, m.player));
  });
  return out;
}

}  // namespace pikl::testing

#endif  // PIKL_TESTS_TEST_UTIL_H_
