#include <cmath>
#include <cstdio>
#include <map>

#include <gtest/gtest.h>

#include "belief_oracle.h"
#include "pikl/belief/belief.h"
#include "pikl/errors.h"
#include "pikl/policy/scripted.h"
#include "test_util.h"

namespace pikl {
namespace {

using belief::ExactBelief;
using belief::Hand;
using hanabi::Action;
using hanabi::GameConfig;
using hanabi::GameRecord;
using hanabi::Observation;
using testing::C;

GameConfig Small() { return GameConfig::Mini(2, 3); }

std::vector<int> Key(const Hand& h, int ranks) {
  std::vector<int> k;
  for (const auto& c : h) k.push_back(c.Index(ranks));
  return k;
}

std::vector<Observation> ViewsOf(const GameRecord& rec, int moves, int me) {
  std::vector<Observation> aoh;
  hanabi::GameState s = hanabi::GameState::FromDeckOrder(hanabi::MakeConfig(rec.config), rec.deck);
  aoh.push_back(hanabi::Observe(s, me));
  for (int i = 0; i < moves; ++i) {
    s.Apply(Action::FromIndex(rec.config, rec.moves[i].action));
    aoh.push_back(hanabi::Observe(s, me));
  }
  return aoh;
}

TEST(ExactBelief, MatchesBruteForceOverDeals) {
  const GameConfig cfg = Small();
  policy::ScriptedPolicy partner(cfg, policy::Skill::kMedium, 0.25);
  int compared = 0;
  for (uint64_t seed = 0; seed < 12; ++seed) {
    const GameRecord rec = testing::PlayWith(cfg, seed, partner, partner);
    for (int moves : {4, 5, 6, 9}) {
      if (moves > static_cast<int>(rec.moves.size())) continue;
      const int me = moves % 2;  // the seat about to act
      const auto oracle = testing::BruteForcePosterior(rec, moves, me, partner);
      const ExactBelief b = ExactBelief::Compute(oracle.aoh, partner);
      ASSERT_EQ(b.support().size(), oracle.posterior.size()) << seed << "/" << moves;
      for (const auto& w : b.support()) {
        const auto it = oracle.posterior.find(Key(w.hand, cfg.NumRanks()));
        ASSERT_NE(it, oracle.posterior.end());
        EXPECT_NEAR(w.weight, it->second, 1e-9);
      }
      ++compared;
    }
  }
  EXPECT_GE(compared, 40);
}

TEST(ExactBelief, TurnZeroMarginalsAreCountFrequencies) {
  const GameConfig cfg = Small();
  policy::UniformPolicy u(cfg);
  const auto s = hanabi::NewGame(cfg, 9);
  const Observation o = hanabi::Observe(s, 0);
  const ExactBelief b = ExactBelief::Compute(hanabi::AohView(&o, 1), u);
  const auto counts = hanabi::UnseenCounts(o);
  double total = 0;
  for (int t = 0; t < cfg.NumCardTypes(); ++t) total += counts[t];
  const auto m = b.SlotMarginals(cfg.NumCardTypes(), cfg.NumRanks());
  for (int slot = 0; slot < cfg.hand_size; ++slot) {
    for (int t = 0; t < cfg.NumCardTypes(); ++t) EXPECT_NEAR(m[slot][t], counts[t] / total, 1e-12);
  }
}

TEST(ExactBelief, RankHintPinsMarkedSlots) {
  const GameConfig cfg = GameConfig::Mini();
  const auto cp = hanabi::MakeConfig(cfg);
  // Seat 0: rank-1 cards in slots 0 and 2 only.
  const auto deck = testing::RiggedDeck(
      cfg, {C(0, 0), C(0, 2), C(1, 0), C(1, 3), C(0, 1), C(1, 1), C(0, 3), C(1, 2)});
  auto s = hanabi::GameState::FromDeckOrder(cp, deck);
  std::vector<Observation> aoh = {hanabi::Observe(s, 0)};
  s.Apply(Action::HintColor(0));
  aoh.push_back(hanabi::Observe(s, 0));
  s.Apply(Action::HintRank(0));
  aoh.push_back(hanabi::Observe(s, 0));
  ASSERT_EQ(aoh.back().last_move->hinted_slots, 0b0101);
  policy::UniformPolicy u(cfg);
  const ExactBelief b = ExactBelief::Compute(aoh, u);
  ASSERT_FALSE(b.support().empty());
  for (const auto& w : b.support()) {
    EXPECT_EQ(w.hand[0].rank, 0);
    EXPECT_EQ(w.hand[2].rank, 0);
    EXPECT_NE(w.hand[1].rank, 0);
    EXPECT_NE(w.hand[3].rank, 0);
  }
}

TEST(ExactBelief, TrueHandIsInSupport) {
  const GameConfig cfg = Small();
  policy::ScriptedPolicy partner(cfg, policy::Skill::kStrong, 0.1);
  for (uint64_t seed = 100; seed < 130; ++seed) {
    const GameRecord rec = testing::PlayWith(cfg, seed, partner, partner);
    hanabi::GameState s = hanabi::GameState::FromDeckOrder(hanabi::MakeConfig(cfg), rec.deck);
    std::vector<std::vector<Observation>> aoh(2);
    for (int p = 0; p < 2; ++p) aoh[p].push_back(hanabi::Observe(s, p));
    for (size_t i = 0; i < rec.moves.size(); ++i) {
      const int me = s.active_player();
      const ExactBelief b = ExactBelief::Compute(aoh[me], partner);
      bool found = false;
      for (const auto& w : b.support()) found |= w.hand == s.hand(me);
      ASSERT_TRUE(found) << seed << " move " << i;
      s.Apply(Action::FromIndex(cfg, rec.moves[i].action));
      for (int p = 0; p < 2; ++p) aoh[p].push_back(hanabi::Observe(s, p));
    }
  }
}

TEST(ExactBelief, InvariantUnderColorRelabeling) {
  const GameConfig cfg = Small();
  policy::ScriptedPolicy partner(cfg, policy::Skill::kStrong, 0.2);
  const std::vector<int> perm = {1, 0};
  for (uint64_t seed = 0; seed < 8; ++seed) {
    const GameRecord rec = testing::PlayWith(cfg, seed, partner, partner);
    const GameRecord prec = hanabi::ApplyColorPermutation(rec, perm);
    const int moves = std::min<int>(7, rec.moves.size() - 1);
    const int me = moves % 2;
    const ExactBelief a = ExactBelief::Compute(ViewsOf(rec, moves, me), partner);
    const ExactBelief b = ExactBelief::Compute(ViewsOf(prec, moves, me), partner);
    std::map<std::vector<int>, double> pb;
    for (const auto& w : b.support()) pb[Key(w.hand, cfg.NumRanks())] = w.weight;
    ASSERT_EQ(a.support().size(), b.support().size());
    for (const auto& w : a.support()) {
      Hand ph;
      for (const auto& c : w.hand) ph.push_back(hanabi::PermuteCard(c, perm));
      EXPECT_NEAR(pb.at(Key(ph, cfg.NumRanks())), w.weight, 1e-12);
    }
  }
}

TEST(ExactBelief, SampleFrequenciesMatchWeights) {
  const GameConfig cfg = Small();
  policy::ScriptedPolicy partner(cfg, policy::Skill::kMedium, 0.3);
  const GameRecord rec = testing::PlayWith(cfg, 4, partner, partner);
  const auto aoh = ViewsOf(rec, 5, 1);
  const ExactBelief b = ExactBelief::Compute(aoh, partner);
  belief::ExactBeliefModel model(std::make_shared<policy::ScriptedPolicy>(partner));
  Rng rng(3);
  const int n = 100000;
  const auto hands = belief::SampleHands(model, aoh, n, rng);
  ASSERT_EQ(static_cast<int>(hands.size()), n);
  std::map<std::vector<int>, double> freq;
  for (const auto& h : hands) freq[Key(h, cfg.NumRanks())] += 1.0 / n;
  double tv = 0;
  for (const auto& w : b.support()) tv += std::abs(freq[Key(w.hand, cfg.NumRanks())] - w.weight);
  tv /= 2;
  EXPECT_LT(tv, 0.02);
}

TEST(ExactBelief, FullyHintedHandIsAPointMass) {
  GameConfig cfg;
  cfg.colors = 1;
  cfg.hand_size = 2;
  const auto cp = hanabi::MakeConfig(cfg);
  const auto deck = testing::RiggedDeck(cfg, {C(0, 0), C(0, 1), C(0, 0), C(0, 2)});
  auto s = hanabi::GameState::FromDeckOrder(cp, deck);
  std::vector<Observation> aoh = {hanabi::Observe(s, 0)};
  for (Action a : {Action::HintRank(0), Action::HintRank(0), Action::HintRank(2),
                   Action::HintRank(1)}) {
    s.Apply(a);
    aoh.push_back(hanabi::Observe(s, 0));
  }
  belief::ExactBeliefModel model(std::make_shared<policy::UniformPolicy>(cfg));
  Rng rng(1);
  const auto hands = belief::SampleHands(model, aoh, 500, rng);
  for (const auto& h : hands) EXPECT_EQ(h, (Hand{C(0, 0), C(0, 1)}));
}

TEST(ExactBelief, GuardsCapAndEmptySupport) {
  const GameConfig std_cfg = GameConfig::Standard();
  const Observation o = hanabi::Observe(hanabi::NewGame(std_cfg, 1), 0);
  policy::UniformPolicy u(std_cfg);
  EXPECT_THROW(ExactBelief::Compute(hanabi::AohView(&o, 1), u), BeliefError);

  // The partner's recorded moves contradict a deterministic model.
  const GameConfig cfg = Small();
  policy::ScriptedPolicy strict(cfg, policy::Skill::kStrong, 0.0);
  for (uint64_t seed = 0;; ++seed) {
    ASSERT_LT(seed, 50u);
    const GameRecord rec = testing::RandomGame(cfg, seed);
    const auto aoh = ViewsOf(rec, 4, 0);
    try {
      ExactBelief::Compute(aoh, strict);
    } catch (const BeliefError&) {
      SUCCEED();
      break;
    }
  }
}

class NeverValid : public belief::BeliefModel {
 public:
  std::string Name() const override { return "never"; }
  belief::SampleResult SampleUpTo(hanabi::AohView, int, int64_t max_attempts,
                                  Rng&) const override {
    return {{}, max_attempts};
  }
};

TEST(SampleHands, RejectionBudgetErrorReportsAcceptance) {
  const Observation o = hanabi::Observe(hanabi::NewGame(Small(), 1), 0);
  Rng rng(1);
  try {
    belief::SampleHands(NeverValid(), hanabi::AohView(&o, 1), 10, rng);
    FAIL();
  } catch (const BeliefError& e) {
    EXPECT_NE(std::string(e.what()).find("acceptance rate"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
  }
}

TEST(CountPriorBelief, SamplesAreConsistent) {
  const GameConfig cfg = GameConfig::Mini();
  belief::CountPriorBelief prior;
  Rng rng(5);
  for (uint64_t seed = 0; seed < 20; ++seed) {
    for (const Observation& o : testing::DecisionViews(testing::RandomGame(cfg, seed))) {
      for (const Hand& h : belief::SampleHands(prior, hanabi::AohView(&o, 1), 5, rng)) {
        ASSERT_TRUE(belief::IsConsistent(o, h));
      }
    }
  }
}

belief::BeliefTrainConfig QuickBelief() {
  belief::BeliefTrainConfig h;
  h.epochs = 4;
  h.games_per_epoch = 1000;
  h.heldout_games = 200;
  return h;
}

TEST(LearnedBelief, BeatsCountPriorAndImprovesEarly) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy pi(cfg, policy::Skill::kMedium, 0.1);
  belief::BeliefTrainReport rep;
  const auto model = belief::TrainBelief(pi, pi, cfg, QuickBelief(), &rep);
  std::printf("held-out nll/card: prior %.4f, epochs", rep.count_prior_nll_per_card);
  for (double v : rep.heldout_nll_per_card) std::printf(" %.4f", v);
  std::printf("\n");
  EXPECT_LE(*std::min_element(rep.heldout_nll_per_card.begin(), rep.heldout_nll_per_card.end()),
            rep.count_prior_nll_per_card);
  EXPECT_LT(rep.heldout_nll_per_card[1], rep.heldout_nll_per_card[0]);
  EXPECT_LT(rep.heldout_nll_per_card[2], rep.heldout_nll_per_card[1]);
}

TEST(LearnedBelief, ConditionalsNormalizeAndSamplesAreValid) {
  const GameConfig cfg = GameConfig::Mini();
  policy::UniformPolicy u(cfg);
  auto hyper = QuickBelief();
  hyper.epochs = 2;
  const auto model = belief::TrainBelief(u, u, cfg, hyper);
  Rng rng(8);
  int64_t checked = 0;
  for (uint64_t seed = 0; checked < 10000; ++seed) {
    for (const Observation& o : testing::DecisionViews(testing::RandomGame(cfg, 500 + seed))) {
      const auto p = model->Conditional(o, {}, 0);
      double sum = 0;
      for (double x : p) sum += x;
      ASSERT_NEAR(sum, 1.0, 1e-9);
      for (const Hand& h : belief::SampleHands(*model, hanabi::AohView(&o, 1), 25, rng)) {
        ASSERT_TRUE(belief::IsConsistent(o, h));
        ++checked;
      }
    }
  }
}

TEST(LearnedBelief, CheckpointRoundTrip) {
  const GameConfig cfg = Small();
  policy::UniformPolicy u(cfg);
  auto hyper = QuickBelief();
  hyper.epochs = 1;
  const auto model = belief::TrainBelief(u, u, cfg, hyper);
  const auto back = belief::LearnedBelief::FromCheckpoint(
      policy::Checkpoint::FromJson(nlohmann::json::parse(model->ToCheckpoint().ToJson().dump())));
  EXPECT_TRUE(back->net() == model->net());
  EXPECT_EQ(back->count_prior(), model->count_prior());
}

}  // namespace
}  // namespace pikl
