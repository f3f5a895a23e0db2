#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include <gtest/gtest.h>

#include "pikl/errors.h"
#include "pikl/policy/bc.h"
#include "pikl/policy/checkpoint.h"
#include "pikl/policy/features.h"
#include "pikl/policy/mlp.h"
#include "pikl/policy/network.h"
#include "pikl/policy/policy.h"
#include "pikl/policy/scripted.h"
#include "test_util.h"

namespace pikl {
namespace {

using hanabi::Action;
using hanabi::GameConfig;
using hanabi::GameRecord;
using hanabi::GameState;
using hanabi::Observation;
using policy::FeatureEncoder;
using testing::C;

const std::vector<double> kVocab = {1, 2, 5, 10};

Observation FreshView(const GameConfig& cfg, uint64_t seed, int player = 0) {
  return hanabi::Observe(hanabi::NewGame(cfg, seed), player);
}

TEST(Encode, LambdaBlockOneHot) {
  const GameConfig cfg = GameConfig::Mini();
  const FeatureEncoder enc(cfg, kVocab);
  const Observation obs = FreshView(cfg, 3);
  const auto v = enc.Encode(obs, 5.0);
  EXPECT_EQ(v.lambda_block, (std::vector<float>{0, 0, 1, 0}));
  const auto u = enc.Encode(obs, std::nullopt);
  EXPECT_EQ(u.lambda_block, (std::vector<float>{0, 0, 0, 0}));
  EXPECT_EQ(u.public_block, v.public_block);
  EXPECT_THROW(enc.Encode(obs, 3.0), UsageError);
  EXPECT_EQ(static_cast<int>(v.Flat().size()), enc.size());
}

TEST(Encode, DeterministicAndFixedLength) {
  const GameConfig cfg = GameConfig::Standard();
  const FeatureEncoder enc(cfg, {});
  const GameRecord rec = testing::RandomGame(cfg, 11);
  for (const Observation& o : testing::DecisionViews(rec)) {
    const auto a = enc.Encode(o, std::nullopt);
    EXPECT_EQ(a, enc.Encode(o, std::nullopt));
    EXPECT_EQ(static_cast<int>(a.public_block.size()), enc.public_size());
    EXPECT_EQ(static_cast<int>(a.private_block.size()), enc.private_size());
  }
}

// Two hint orders that commute: the histories differ, the final views do not.
TEST(Encode, DistinctHistoriesSameContentCollide) {
  const GameConfig cfg = GameConfig::Mini();
  auto cp = hanabi::MakeConfig(cfg);
  const auto deck = testing::RiggedDeck(
      cfg, {C(0, 0), C(1, 1), C(0, 2), C(1, 3), C(1, 0), C(0, 1), C(1, 2), C(0, 3)});
  auto run = [&](std::vector<Action> moves) {
    GameState s = GameState::FromDeckOrder(cp, deck);
    std::vector<Observation> aoh;
    aoh.push_back(hanabi::Observe(s, 0));
    for (Action a : moves) {
      s.Apply(a);
      aoh.push_back(hanabi::Observe(s, 0));
    }
    return aoh;
  };
  const auto a = run({Action::HintColor(1), Action::HintRank(1), Action::HintRank(2),
                      Action::HintColor(0)});
  const auto b = run({Action::HintRank(2), Action::HintRank(1), Action::HintColor(1),
                      Action::HintColor(0)});
  ASSERT_FALSE(a[1] == b[1]);
  const FeatureEncoder enc(cfg, kVocab);
  EXPECT_EQ(enc.Encode(a.back(), 2.0), enc.Encode(b.back(), 2.0));
}

TEST(Encode, EverySinglePublicFieldChangesTheVector) {
  const GameConfig cfg = GameConfig::Mini();
  const FeatureEncoder enc(cfg, {});
  const GameRecord rec = testing::RandomGame(cfg, 5);
  const Observation base = testing::DecisionViews(rec)[6];
  const auto v0 = enc.Encode(base, std::nullopt);
  std::vector<std::pair<std::string, std::function<void(Observation&)>>> edits = {
      {"firework", [](Observation& o) { o.fireworks[1] = (o.fireworks[1] + 1) % 6; }},
      {"tokens", [](Observation& o) { o.hint_tokens = (o.hint_tokens + 1) % 9; }},
      {"lives", [](Observation& o) { o.lives = (o.lives + 1) % 4; }},
      {"deck", [](Observation& o) { o.deck_size -= 1; }},
      {"final turns", [](Observation& o) { o.final_turns_remaining = 1; }},
      {"discards", [](Observation& o) { o.discards[0] ^= 1; }},
      {"own colors", [](Observation& o) { o.own_knowledge[0].colors ^= 1; }},
      {"own ranks", [](Observation& o) { o.own_knowledge[2].ranks ^= 4; }},
      {"own hinted", [](Observation& o) { o.own_knowledge[1].rank_hinted ^= true; }},
      {"partner hinted", [](Observation& o) { o.partner_knowledge[3].color_hinted ^= true; }},
      {"last move", [](Observation& o) { o.last_move->success ^= true; }},
      {"last move slots", [](Observation& o) { o.last_move->hinted_slots ^= 2; }},
      {"no last move", [](Observation& o) { o.last_move.reset(); }},
      {"turn", [](Observation& o) { o.current_player = o.partner(); }},
      {"partner card", [](Observation& o) { o.partner_hand[0].rank = (o.partner_hand[0].rank + 1) % 5; }},
  };
  for (auto& [name, edit] : edits) {
    Observation o = base;
    edit(o);
    EXPECT_FALSE(enc.Encode(o, std::nullopt) == v0) << name;
  }
}

TEST(PolicyEval, UniformOverSevenLegal) {
  const GameConfig cfg = GameConfig::Mini();
  policy::UniformPolicy u(cfg);
  Observation obs = FreshView(cfg, 1);
  obs.legal_mask = 0b1011011011;  // seven chosen entries
  const auto p = u.Probs(hanabi::AohView(&obs, 1), std::nullopt);
  for (int i = 0; i < cfg.NumActions(); ++i) {
    EXPECT_DOUBLE_EQ(p[i], ((obs.legal_mask >> i) & 1) ? 1.0 / 7 : 0.0);
  }
}

TEST(PolicyEval, ArgmaxTiesGoToLowestIndex) {
  const std::vector<double> v = {0.1, 0.4, 0.4, 0.1};
  EXPECT_EQ(policy::Argmax(v), 1);
  EXPECT_EQ(policy::MaskedArgmax(v, 0b1100), 2);
  EXPECT_THROW(policy::MaskedArgmax(v, 0), UsageError);
}

TEST(PolicyEval, EveryPolicyIsAMaskedDistribution) {
  const GameConfig cfg = GameConfig::Mini();
  const FeatureEncoder enc(cfg, kVocab);
  std::vector<policy::PolicyPtr> pols = {
      std::make_shared<policy::UniformPolicy>(cfg),
      std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kWeak, 0.1),
      std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kMedium, 0.0),
      std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kStrong, 0.3),
      std::make_shared<policy::NetworkPolicy>(
          cfg, kVocab, true, policy::Mlp({enc.size(), 32, cfg.NumActions()}, 4)),
  };
  for (uint64_t seed = 0; seed < 60; ++seed) {
    const GameRecord rec = testing::RandomGame(cfg, seed);
    for (const Observation& o : testing::DecisionViews(rec)) {
      for (const auto& pol : pols) {
        const auto p = pol->Probs(hanabi::AohView(&o, 1), 2.0);
        ASSERT_NO_THROW(policy::CheckDistribution(p, o.legal_mask)) << pol->Name();
      }
    }
  }
}

TEST(PolicyEval, BatchMatchesSingle) {
  const GameConfig cfg = GameConfig::Mini();
  const FeatureEncoder enc(cfg, {});
  policy::NetworkPolicy net(cfg, {}, false, policy::Mlp({enc.size(), 16, cfg.NumActions()}, 9));
  const auto views = testing::DecisionViews(testing::RandomGame(cfg, 8));
  std::vector<const Observation*> ptrs;
  for (const auto& v : views) ptrs.push_back(&v);
  std::vector<policy::ActionProbs> batch;
  net.BatchProbs(ptrs, std::nullopt, &batch);
  for (size_t i = 0; i < views.size(); ++i) {
    const auto single = net.Probs(hanabi::AohView(&views[i], 1), std::nullopt);
    for (size_t a = 0; a < single.size(); ++a) EXPECT_NEAR(batch[i][a], single[a], 1e-6);
  }
}

TEST(Mlp, GradientMatchesFiniteDifference) {
  policy::Mlp net({5, 7, 6, 3}, 21);
  Rng rng(2);
  policy::Matrix x(5, 4);
  for (int i = 0; i < x.size(); ++i) x.data()[i] = static_cast<float>(rng.Normal());
  policy::Matrix wout(3, 4);
  for (int i = 0; i < wout.size(); ++i) wout.data()[i] = static_cast<float>(rng.Normal());
  // L = sum(wout .* f(x)); dL/dout = wout.
  auto loss = [&](const policy::Mlp& n) {
    return static_cast<double>(n.Forward(x).cwiseProduct(wout).sum());
  };
  policy::Mlp::Tape tape;
  net.Forward(x, &tape);
  auto g = net.ZeroGradients();
  net.Backward(tape, wout, &g);
  const double h = 1e-3;
  for (int l = 0; l < net.num_layers(); ++l) {
    for (int k = 0; k < std::min<int>(8, net.weights()[l].size()); ++k) {
      policy::Mlp a = net, b = net;
      a.weights()[l].data()[k] += h;
      b.weights()[l].data()[k] -= h;
      EXPECT_NEAR((loss(a) - loss(b)) / (2 * h), g.w[l].data()[k], 2e-2) << l << "," << k;
    }
    policy::Mlp a = net, b = net;
    a.biases()[l][0] += h;
    b.biases()[l][0] -= h;
    EXPECT_NEAR((loss(a) - loss(b)) / (2 * h), g.b[l][0], 2e-2);
  }
}

TEST(Mlp, JsonRoundTripIsExact) {
  policy::Mlp net({6, 4, 3}, 5);
  const policy::Mlp back = policy::Mlp::FromJson(nlohmann::json::parse(net.ToJson().dump()));
  EXPECT_TRUE(back == net);
  policy::Mlp linear({6, 3}, 5);
  EXPECT_EQ(linear.num_layers(), 1);
}

TEST(MaskedSoftmax, IllegalEntriesAreExactlyZero) {
  const std::vector<float> logits = {3.0f, 100.0f, -2.0f, 0.5f};
  const auto p = policy::MaskedSoftmax(logits, 0b1101);
  EXPECT_EQ(p[1], 0.0);
  EXPECT_NEAR(p[0] + p[2] + p[3], 1.0, 1e-12);
  EXPECT_NEAR(p[0] / p[3], std::exp(2.5), 1e-9);
}

TEST(Scripted, NoiselessIsDeterministic) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy s(cfg, policy::Skill::kStrong, 0.0);
  const GameRecord a = testing::PlayWith(cfg, 17, s, s);
  const GameRecord b = testing::PlayWith(cfg, 17, s, s);
  EXPECT_EQ(a.ToJson(), b.ToJson());
  const GameRecord c = testing::PlayWith(cfg, 17, s, s, /*greedy=*/true);
  EXPECT_EQ(a.ToJson(), c.ToJson());
}

TEST(Scripted, FullNoiseIsUniform) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy s(cfg, policy::Skill::kMedium, 1.0);
  policy::UniformPolicy u(cfg);
  for (const Observation& o : testing::DecisionViews(testing::RandomGame(cfg, 4))) {
    EXPECT_EQ(s.Probs(hanabi::AohView(&o, 1), std::nullopt),
              u.Probs(hanabi::AohView(&o, 1), std::nullopt));
  }
}

TEST(Scripted, RejectsBadArguments) {
  EXPECT_THROW(policy::SkillFromName("expert"), ConfigError);
  EXPECT_THROW(policy::ScriptedPolicy(GameConfig::Mini(), policy::Skill::kWeak, 1.5), ConfigError);
}

TEST(Scripted, RuleIsColorEquivariant) {
  const GameConfig cfg = GameConfig::Standard();
  for (auto skill : {policy::Skill::kWeak, policy::Skill::kMedium, policy::Skill::kStrong}) {
    policy::ScriptedPolicy s(cfg, skill, 0.0);
    for (uint64_t seed = 0; seed < 20; ++seed) {
      const GameRecord rec = testing::PlayWith(cfg, seed, s, s);
      const std::vector<int> perm = {3, 0, 4, 1, 2};
      const GameRecord prec = hanabi::ApplyColorPermutation(rec, perm);
      const auto v = testing::DecisionViews(rec);
      const auto pv = testing::DecisionViews(prec);
      ASSERT_EQ(v.size(), pv.size());
      for (size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(hanabi::PermuteAction(s.RuleAction(v[i]), perm), s.RuleAction(pv[i]));
      }
    }
  }
}

double SelfPlayMean(const GameConfig& cfg, const policy::Policy& p, int n) {
  double total = 0;
  for (int i = 0; i < n; ++i) total += testing::PlayWith(cfg, 1000 + i, p, p).final_score;
  return total / n;
}

TEST(Scripted, StrongOutscoresWeak) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy weak(cfg, policy::Skill::kWeak, 0.05);
  policy::ScriptedPolicy medium(cfg, policy::Skill::kMedium, 0.05);
  policy::ScriptedPolicy strong(cfg, policy::Skill::kStrong, 0.05);
  const double w = SelfPlayMean(cfg, weak, 2000);
  const double m = SelfPlayMean(cfg, medium, 2000);
  const double s = SelfPlayMean(cfg, strong, 2000);
  std::printf("self-play means over 2000 mini games: weak %.3f medium %.3f strong %.3f\n", w, m, s);
  EXPECT_GT(s, w);
}

std::vector<GameRecord> ScriptedDataset(const GameConfig& cfg, const policy::Policy& p, int n,
                                        uint64_t base) {
  std::vector<GameRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(testing::PlayWith(cfg, base + i, p, p));
  return out;
}

TEST(BcTrain, OverfitsASingleGame) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy s(cfg, policy::Skill::kStrong, 0.0);
  const std::vector<GameRecord> one = ScriptedDataset(cfg, s, 1, 3);
  policy::TrainConfig hyper;
  hyper.validation_fraction = 0.0;
  hyper.max_epochs = 300;
  hyper.patience = 300;
  hyper.batch_size = 16;
  policy::TrainReport rep;
  const auto pol = policy::BcTrain(one, {}, hyper, &rep);
  EXPECT_DOUBLE_EQ(policy::PolicyAccuracy(*pol, one, false), 1.0);
  EXPECT_DOUBLE_EQ(rep.best_val_accuracy, 1.0);
}

TEST(BcTrain, ErrorsOnEmptyOrTinyDataset) {
  EXPECT_THROW(policy::BcTrain({}, {}, {}), TrainingError);
  const GameConfig cfg = GameConfig::Mini();
  const std::vector<GameRecord> few = {testing::RandomGame(cfg, 1), testing::RandomGame(cfg, 2)};
  EXPECT_THROW(policy::BcTrain(few, {}, {}), TrainingError);  // 5% of 2 games < 1 game
}

TEST(BcTrain, FirstEpochLossDecreasesAndBestEpochIsReturned) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy s(cfg, policy::Skill::kMedium, 0.1);
  const auto data = ScriptedDataset(cfg, s, 200, 50);
  policy::TrainConfig hyper;
  hyper.max_epochs = 6;
  policy::TrainReport rep;
  const auto pol = policy::BcTrain(data, {}, hyper, &rep);
  const auto& l = rep.first_epoch_batch_losses;
  ASSERT_GE(l.size(), 20u);
  const double head = std::accumulate(l.begin(), l.begin() + 5, 0.0) / 5;
  const double tail = std::accumulate(l.end() - 5, l.end(), 0.0) / 5;
  EXPECT_LT(tail, head);
  EXPECT_EQ(rep.val_games, 10);
  ASSERT_FALSE(rep.epochs.empty());
  double best = 0;
  int arg = 0;
  for (const auto& e : rep.epochs) {
    if (e.val_accuracy > best) best = e.val_accuracy, arg = e.epoch;
  }
  EXPECT_EQ(rep.best_epoch, arg);
  const std::vector<GameRecord> held(data.end() - 10, data.end());
  EXPECT_NEAR(policy::PolicyAccuracy(*pol, held, false), best, 1e-12);
}

TEST(BcTrain, ColorShuffleMatchesUnshuffledOnSymmetricTeacher) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy s(cfg, policy::Skill::kStrong, 0.0);
  const auto data = ScriptedDataset(cfg, s, 400, 7000);
  policy::TrainConfig hyper;
  hyper.max_epochs = 12;
  policy::TrainReport off, on;
  policy::BcTrain(data, {.use_color_shuffle = false}, hyper, &off);
  policy::BcTrain(data, {.use_color_shuffle = true}, hyper, &on);
  std::printf("held-out accuracy: shuffle off %.4f, on %.4f\n", off.best_val_accuracy,
              on.best_val_accuracy);
  EXPECT_NEAR(on.best_val_accuracy, off.best_val_accuracy, 0.02);
}

TEST(BcTrain, LambdaConditioningSeparatesBehaviors) {
  const GameConfig cfg = GameConfig::Mini();
  policy::ScriptedPolicy strong(cfg, policy::Skill::kStrong, 0.0);
  policy::ScriptedPolicy weak(cfg, policy::Skill::kWeak, 0.0);
  std::vector<GameRecord> data;
  for (int i = 0; i < 400; ++i) {
    const bool st = i % 2 == 0;
    GameRecord r = testing::PlayWith(cfg, 300 + i, st ? strong : weak, st ? strong : weak);
    for (auto& m : r.moves) m.lambda_label = st ? 1.0 : 10.0;
    data.push_back(std::move(r));
  }
  policy::TrainConfig hyper;
  hyper.max_epochs = 12;
  policy::TrainReport cond, uncond;
  policy::BcTrain(data, {.condition_on_lambda = true, .lambda_vocabulary = kVocab}, hyper, &cond);
  policy::BcTrain(data, {}, hyper, &uncond);
  for (double lam : {1.0, 10.0}) {
    std::printf("λ=%g held-out accuracy: conditioned %.4f, unconditioned %.4f\n", lam,
                cond.val_accuracy_by_label.at(lam), uncond.val_accuracy_by_label.at(lam));
    EXPECT_GE(cond.val_accuracy_by_label.at(lam), uncond.val_accuracy_by_label.at(lam));
  }
}

TEST(Checkpoint, RoundTripAndConfigGuard) {
  const GameConfig cfg = GameConfig::Mini();
  const FeatureEncoder enc(cfg, kVocab);
  policy::NetworkPolicy net(cfg, kVocab, true, policy::Mlp({enc.size(), 8, cfg.NumActions()}, 3),
                            "pi");
  const std::string path =
      (std::filesystem::temp_directory_path() / "pikl_ckpt_test.json").string();
  policy::SaveCheckpoint(net.ToCheckpoint(), path);
  const auto back = policy::LoadNetworkPolicy(path, cfg);
  EXPECT_TRUE(back->net() == net.net());
  EXPECT_EQ(back->lambda_vocabulary(), kVocab);
  EXPECT_TRUE(back->LambdaConditioned());
  EXPECT_THROW(policy::LoadNetworkPolicy(path, GameConfig::Mini(3, 4)), ConfigError);
  EXPECT_THROW(policy::LoadCheckpoint(path, "belief"), FormatError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace pikl
