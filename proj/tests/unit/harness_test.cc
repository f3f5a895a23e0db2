#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "pikl/errors.h"
#include "pikl/harness/dataset.h"
#include "pikl/harness/eval.h"
#include "pikl/harness/pipeline.h"
#include "pikl/harness/server.h"
#include "pikl/harness/session.h"
#include "pikl/harness/think_time.h"
#include "pikl/policy/scripted.h"
#include "test_util.h"

namespace pikl {
namespace {

using hanabi::GameConfig;
using nlohmann::json;
using testing::C;

// ---------------------------------------------------------------------------
// Evaluation.

TEST(Evaluate, DeterministicAndMatchesPersistedScores) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  policy::ScriptedPolicy a(cfg, policy::Skill::kStrong, 0.0);
  std::vector<hanabi::GameRecord> recs;
  harness::EvalOptions o;
  o.on_record = [&](const hanabi::GameRecord& r) { recs.push_back(r); };
  const auto r1 = harness::Evaluate(a, a, 100, 500, o);
  const auto r2 = harness::Evaluate(a, a, 100, 500);
  EXPECT_EQ(r1.scores, r2.scores);
  ASSERT_EQ(recs.size(), 100u);
  double sum = 0.0;
  for (size_t g = 0; g < recs.size(); ++g) {
    EXPECT_EQ(recs[g].seed, 500 + g);
    EXPECT_EQ(hanabi::Replay(recs[g]).status().final_score, r1.scores[g]);
    sum += recs[g].final_score;
  }
  EXPECT_DOUBLE_EQ(r1.mean, sum / 100);
  int64_t hist = 0;
  for (auto h : r1.histogram) hist += h;
  EXPECT_EQ(hist, 100);
}

TEST(Evaluate, SeatsAlternate) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  policy::ScriptedPolicy a(cfg, policy::Skill::kStrong, 0.0);
  policy::ScriptedPolicy b(cfg, policy::Skill::kWeak, 0.0);
  const auto r = harness::Evaluate(a, b, 6, 40);
  for (int g = 0; g < 6; ++g) {
    const auto ref = g % 2 == 0 ? harness::PlayGame(a, b, {}, {}, 40 + g, true)
                                : harness::PlayGame(b, a, {}, {}, 40 + g, true);
    EXPECT_EQ(r.scores[g], ref.final_score) << g;
  }
}

TEST(Evaluate, StandardErrorAndThreads) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  policy::ScriptedPolicy a(cfg, policy::Skill::kMedium, 0.3);
  harness::EvalOptions o;
  o.greedy = false;
  const auto one = harness::Evaluate(a, a, 200, 7, o);
  o.workers = 3;
  const auto three = harness::Evaluate(a, a, 200, 7, o);
  EXPECT_EQ(one.scores, three.scores);
  double ss = 0.0;
  for (int s : one.scores) ss += (s - one.mean) * (s - one.mean);
  EXPECT_NEAR(one.stderr_of_mean, std::sqrt(ss / 199.0 / 200.0), 1e-12);
  EXPECT_GT(one.stderr_of_mean, 0.0);
}

TEST(Evaluate, Guards) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  policy::ScriptedPolicy a(cfg, policy::Skill::kMedium, 0.0);
  policy::ScriptedPolicy other(GameConfig::Mini(3, 4), policy::Skill::kMedium, 0.0);
  EXPECT_THROW(harness::Evaluate(a, a, 0, 0), UsageError);
  EXPECT_THROW(harness::Evaluate(a, other, 10, 0), ConfigError);
}

// Knows the rigged deck, replays the history to recover its own hand, and
// plays perfectly: play a playable card, otherwise hint.
class DeckOracle : public policy::Policy {
 public:
  DeckOracle(const GameConfig& cfg, std::vector<hanabi::Card> deck)
      : cfg_(cfg), deck_(std::move(deck)) {}
  std::string Name() const override { return "oracle"; }
  const GameConfig& config() const override { return cfg_; }
  bool Markov() const override { return false; }
  policy::ActionProbs Probs(hanabi::AohView aoh, std::optional<double>) const override {
    hanabi::GameState s = hanabi::GameState::FromDeckOrder(hanabi::MakeConfig(cfg_), deck_);
    for (size_t i = 1; i < aoh.size(); ++i) s.Apply(aoh[i].last_move->action);
    const int me = aoh.back().observer;
    policy::ActionProbs p(cfg_.NumActions(), 0.0);
    const auto& hand = s.hand(me);
    int a = -1;
    for (size_t k = 0; k < hand.size() && a < 0; ++k) {
      if (s.firework(hand[k].color) == hand[k].rank) a = hanabi::Action::Play(k).ToIndex(cfg_);
    }
    // Otherwise any legal hint.
    for (int i = 2 * cfg_.hand_size; i < cfg_.NumActions() && a < 0; ++i) {
      if ((aoh.back().legal_mask >> i) & 1u) a = i;
    }
    if (a < 0) throw UsageError("oracle has no playable card and no hint");
    p[a] = 1.0;
    return p;
  }

 private:
  GameConfig cfg_;
  std::vector<hanabi::Card> deck_;
};

TEST(Evaluate, RiggedOneColorDeckIsAlwaysPerfect) {
  GameConfig cfg = GameConfig::Mini(1, 3);
  // Seat 0 holds 1,2,3 and seat 1 holds 4,5,1; every needed card is dealt.
  const auto deck = testing::RiggedDeck(cfg, {C(0, 0), C(0, 1), C(0, 2), C(0, 3), C(0, 4), C(0, 0)});
  DeckOracle oracle(cfg, deck);
  harness::EvalOptions o;
  o.deck = [&](uint64_t) { return deck; };
  const auto r = harness::Evaluate(oracle, oracle, 20, 0, o);
  EXPECT_DOUBLE_EQ(r.perfect_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.mean, 5.0);
  EXPECT_EQ(r.histogram[5], 20);
}

// ---------------------------------------------------------------------------
// Dataset I/O.

std::vector<hanabi::GameRecord> SomeRecords(int n) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  policy::ScriptedPolicy p(cfg, policy::Skill::kMedium, 0.2);
  std::vector<hanabi::GameRecord> out;
  for (int g = 0; g < n; ++g) {
    auto rec = testing::PlayWith(cfg, g, p, p);
    if (g % 3 == 0) {
      for (auto& m : rec.moves) m.lambda_label = m.player == 0 ? 2.0 : 5.0;
    }
    out.push_back(std::move(rec));
  }
  return out;
}

TEST(Dataset, ThousandRecordsRoundTripByteIdentically) {
  const auto recs = SomeRecords(1000);
  const std::string path = ::testing::TempDir() + "/ds.jsonl";
  harness::WriteDataset(path, recs);
  const auto back = harness::ReadDataset(path);
  EXPECT_EQ(back, recs);
  const std::string path2 = ::testing::TempDir() + "/ds2.jsonl";
  harness::WriteDataset(path2, back);
  std::ifstream a(path), b(path2);
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  EXPECT_EQ(sa.str(), sb.str());
  EXPECT_FALSE(back[1].LambdaLabel(0).has_value());  // absent label: unconditioned
  EXPECT_EQ(back[0].LambdaLabel(1), 5.0);
}

TEST(Dataset, CorruptLineSeventeenIsNamed) {
  const auto recs = SomeRecords(30);
  std::stringstream buf;
  harness::DatasetWriter w(&buf);
  for (const auto& r : recs) w.Write(r);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(buf, line)) lines.push_back(line);
  lines[16] = lines[16].substr(0, lines[16].size() / 2);  // truncated
  std::stringstream bad;
  for (const auto& l : lines) bad << l << '\n';
  int seen = 0;
  try {
    harness::ReadDataset(bad, [&](hanabi::GameRecord&&) { ++seen; });
    FAIL() << "no error";
  } catch (const FormatError& e) {
    EXPECT_EQ(e.line(), 17);
    EXPECT_NE(std::string(e.what()).find("line 17"), std::string::npos);
  }
  EXPECT_EQ(seen, 16);  // streaming: earlier records were delivered

  json j = recs[0].ToJson();
  j["schema_version"] = 99;
  std::stringstream ver(j.dump() + "\n");
  EXPECT_THROW(harness::ReadDataset(ver, [](hanabi::GameRecord&&) {}), FormatError);

  // A record whose stored score disagrees with its moves fails validation.
  j = recs[0].ToJson();
  j["final_score"] = j["final_score"].get<int>() + 1;
  std::stringstream lie(j.dump() + "\n");
  EXPECT_THROW(harness::ReadDataset(lie, [](hanabi::GameRecord&&) {}), FormatError);
}

// ---------------------------------------------------------------------------
// Think time.

TEST(ThinkTime, HandComputedCases) {
  harness::ThinkTimeConfig c;  // 4 s per nat, [0.5, 8]
  EXPECT_NEAR(harness::SoftmaxEntropy(std::vector<double>{1.3, 1.3}), std::log(2.0), 1e-12);
  EXPECT_NEAR(harness::ThinkTime(std::vector<double>{1.3, 1.3}, c), 4.0 * std::log(2.0), 1e-9);
  EXPECT_NEAR(harness::ThinkTime(std::vector<double>{0.0, -INFINITY, 0.0, -INFINITY}, c),
              4.0 * std::log(2.0), 1e-9);
  EXPECT_NEAR(harness::ThinkTime(std::vector<double>{7.0}, c), c.min_t, 1e-9);
  EXPECT_NEAR(harness::ThinkTime(std::vector<double>{-INFINITY, 2.0, -INFINITY}, c), c.min_t,
              1e-9);
  EXPECT_NEAR(harness::ThinkTime(std::vector<double>{20.0, 0.0, 0.0}, c), c.min_t, 1e-9);
  EXPECT_LT(harness::SoftmaxEntropy(std::vector<double>{20.0, 0.0}), 1e-7);
  // Uniform over n actions: ln n nats; clamps at max_t.
  const std::vector<double> flat(12, 0.0);
  EXPECT_NEAR(harness::SoftmaxEntropy(flat), std::log(12.0), 1e-12);
  EXPECT_NEAR(harness::ThinkTime(flat, c), 8.0, 1e-9);
  c.scale = 1.0;
  EXPECT_NEAR(harness::ThinkTime(flat, c), std::log(12.0), 1e-9);
  EXPECT_THROW(harness::SoftmaxEntropy(std::vector<double>{-INFINITY}), UsageError);
}

TEST(ThinkTime, JitterStaysWithinTenPercent) {
  harness::ThinkTimeConfig c;
  c.min_t = 0.0;
  c.max_t = 100.0;
  const std::vector<double> q = {0.0, 0.0};
  const double base = 4.0 * std::log(2.0);
  Rng rng(3);
  double lo = 1e9, hi = -1e9;
  for (int i = 0; i < 5000; ++i) {
    const double t = harness::ThinkTime(q, c, &rng);
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  EXPECT_GE(lo, 0.9 * base - 1e-12);
  EXPECT_LE(hi, 1.1 * base + 1e-12);
  EXPECT_LT(lo, 0.91 * base);
  EXPECT_GT(hi, 1.09 * base);
  EXPECT_THROW(harness::ThinkTimeConfig::FromJson({{"min_t", 2.0}, {"max_t", 1.0}}), ConfigError);
}

// ---------------------------------------------------------------------------
// Play sessions.

harness::SessionOptions FastOptions(uint64_t seed, int human_seat,
                                    std::vector<json>* sent = nullptr,
                                    std::vector<double>* sleeps = nullptr) {
  harness::SessionOptions o;
  o.seed = seed;
  o.human_seat = human_seat;
  o.sleep = [sleeps](double s) {
    if (sleeps) sleeps->push_back(s);
  };
  if (sent) o.on_send = [sent](const json& m) { sent->push_back(m); };
  return o;
}

// Picks uniformly among the listed legal actions.
auto RandomChooser(uint64_t seed) {
  auto rng = std::make_shared<Rng>(seed);
  return [rng](const json& turn, const json&) {
    const auto& legal = turn["legal_actions"];
    return legal[rng->UniformInt(legal.size())]["action"];
  };
}

struct SessionRun {
  hanabi::GameRecord record;
  harness::BotResult bot;
  std::vector<json> sent;
  std::vector<double> sleeps;
};

SessionRun RunInMemory(policy::PolicyPtr agent, uint64_t seed, int human_seat,
                       std::function<json(const json&, const json&)> choose) {
  SessionRun out;
  auto [server_end, client_end] = harness::InMemoryPair();
  harness::PlaySession session(agent, FastOptions(seed, human_seat, &out.sent, &out.sleeps));
  std::thread client([&, c = client_end.get()] { out.bot = harness::RunBotClient(*c, choose); });
  out.record = session.Run(*server_end);
  client.join();
  return out;
}

TEST(PlaySession, BotGameReplaysToTheReportedScore) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  auto agent = std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kStrong, 0.0);
  for (int g = 0; g < 6; ++g) {
    const auto run = RunInMemory(agent, 100 + g, g % 2, RandomChooser(g));
    ASSERT_TRUE(run.bot.score.has_value());
    EXPECT_FALSE(run.record.aborted);
    EXPECT_EQ(hanabi::Replay(run.record).status().final_score, *run.bot.score);
    EXPECT_EQ(run.bot.reason, hanabi::TerminationName(run.record.termination));
    EXPECT_EQ(run.bot.rejections, 0);

    // seq counts applied moves; move_made players follow turn order and the
    // agent moves only on its own turns.
    int64_t moves = 0;
    for (const auto& m : run.sent) {
      if (m["type"] == "move_made") {
        ++moves;
        EXPECT_EQ(m["seq"], moves);
        EXPECT_EQ(m["player"], run.record.moves[moves - 1].player);
        EXPECT_EQ(m["index"], run.record.moves[moves - 1].action);
      } else {
        EXPECT_EQ(m["seq"], moves);
      }
    }
    EXPECT_EQ(moves, static_cast<int64_t>(run.record.moves.size()));
    int agent_moves = 0;
    for (const auto& m : run.record.moves) agent_moves += m.player != g % 2;
    EXPECT_EQ(static_cast<int>(run.sleeps.size()), agent_moves);
    for (double s : run.sleeps) {
      EXPECT_GE(s, 0.5);
      EXPECT_LE(s, 8.0);
    }
  }
}

TEST(PlaySession, HumanNeverSeesOwnCards) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  auto agent = std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kMedium, 0.0);
  const auto run = RunInMemory(agent, 5, 0, RandomChooser(5));
  // Differential check: rebuild every state and confirm that each
  // observation's visible cards are exactly the partner's hand.
  hanabi::GameState s = hanabi::GameState::FromDeckOrder(hanabi::MakeConfig(cfg), run.record.deck);
  size_t move = 0;
  for (const auto& m : run.sent) {
    if (m["type"] == "move_made") s.Apply(hanabi::Action::FromIndex(cfg, run.record.moves[move++].action));
    if (m["type"] != "observation") continue;
    const auto& partner = m["view"]["partner_hand"];
    ASSERT_EQ(partner.size(), s.hand(1).size());
    for (size_t k = 0; k < partner.size(); ++k) {
      EXPECT_EQ(partner[k]["color"], s.hand(1)[k].color);
      EXPECT_EQ(partner[k]["rank"], s.hand(1)[k].rank);
    }
    EXPECT_FALSE(m["view"].contains("own_hand"));
    EXPECT_EQ(m["view"]["own_knowledge"].size(), s.hand(0).size());
  }

  json leak = {{"type", "observation"}, {"view", {{"own_hand", {{{"color", 0}, {"rank", 1}}}}}}};
  EXPECT_THROW(harness::CheckOutbound(leak), UsageError);
  json hint = {{"type", "move_made"},
               {"action", {{"HintRank", 0}}},
               {"revealed", {{"color", 0}, {"rank", 0}}}};
  EXPECT_THROW(harness::CheckOutbound(hint), UsageError);
  json ok = {{"type", "move_made"},
             {"action", {{"Play", 0}}},
             {"revealed", {{"color", 0}, {"rank", 0}}}};
  EXPECT_NO_THROW(harness::CheckOutbound(ok));
}

TEST(PlaySession, RejectionsLeaveTheStateUnchanged) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  auto agent = std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kStrong, 0.0);
  auto [server_end, client_end] = harness::InMemoryPair();
  std::vector<json> sent;
  harness::PlaySession session(agent, FastOptions(11, 0, &sent));
  std::thread server([&, s = server_end.get()] { session.Run(*s); });

  auto next = [&](const std::string& type) {
    while (true) {
      const json m = json::parse(*client_end->Receive());
      if (m["type"] == type) return m;
    }
  };
  const json turn = next("your_turn");
  EXPECT_EQ(turn["seq"], 0);
  std::set<int> legal;
  for (const auto& a : turn["legal_actions"]) legal.insert(a["index"].get<int>());
  int illegal = -1;
  for (int i = 0; i < cfg.NumActions() && illegal < 0; ++i) {
    if (!legal.count(i)) illegal = i;
  }
  ASSERT_GE(illegal, 0);  // discards are illegal at full tokens
  client_end->Send(json{{"type", "action"}, {"seq", 0}, {"action", illegal}}.dump());
  json r = next("action_rejected");
  EXPECT_EQ(r["code"], harness::kIllegalAction);
  EXPECT_EQ(r["seq"], 0);
  client_end->Send(json{{"type", "action"}, {"seq", 0}, {"action", {{"Play", 9}}}}.dump());
  EXPECT_EQ(next("action_rejected")["code"], harness::kIllegalAction);
  client_end->Send("{not json");
  EXPECT_EQ(next("action_rejected")["code"], harness::kMalformed);
  client_end->Send(json{{"type", "action"}, {"seq", 3}, {"action", *legal.begin()}}.dump());
  EXPECT_EQ(next("action_rejected")["code"], harness::kStaleSeq);
  client_end->Send(json{{"type", "ping"}}.dump());
  EXPECT_EQ(next("pong")["seq"], 0);
  client_end->Send(json{{"type", "action"}, {"seq", 0}, {"action", *legal.begin()}}.dump());
  const json made = next("move_made");
  EXPECT_EQ(made["seq"], 1);
  EXPECT_EQ(made["player"], 0);
  EXPECT_EQ(made["index"], *legal.begin());
  client_end->Close();
  server.join();
}

TEST(PlaySession, DisconnectPersistsAnAbortedRecord) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  auto agent = std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kStrong, 0.0);
  auto [server_end, client_end] = harness::InMemoryPair();
  harness::PlaySession session(agent, FastOptions(12, 0));
  std::thread client([c = client_end.get()] {
    int turns = 0;
    while (auto text = c->Receive()) {
      const json m = json::parse(*text);
      if (m["type"] != "your_turn") continue;
      if (++turns == 3) break;
      c->Send(json{{"type", "action"}, {"seq", m["seq"]}, {"action", m["legal_actions"][0]["action"]}}
                  .dump());
    }
    c->Close();
  });
  const auto rec = session.Run(*server_end);
  client.join();
  EXPECT_TRUE(rec.aborted);
  EXPECT_EQ(rec.termination, hanabi::Termination::kOngoing);
  ASSERT_EQ(rec.moves.size(), 4u);  // two human moves, two agent moves
  std::stringstream buf;
  harness::DatasetWriter w(&buf);
  w.Write(rec);
  std::vector<hanabi::GameRecord> back;
  harness::ReadDataset(buf, [&](hanabi::GameRecord&& r) { back.push_back(std::move(r)); });
  ASSERT_EQ(back.size(), 1u);
  EXPECT_TRUE(back[0].aborted);
}

TEST(PlaySession, RacingClientNeverMovesOutOfTurn) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  auto agent = std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kStrong, 0.0);
  for (int g = 0; g < 5; ++g) {
    auto [server_end, client_end] = harness::InMemoryPair();
    std::vector<json> sent;
    harness::PlaySession session(agent, FastOptions(200 + g, g % 2, &sent));
    std::atomic<bool> done{false};
    // Floods random actions with random seqs from a second thread.
    std::thread spam([&, c = client_end.get()] {
      Rng rng(g);
      while (!done) {
        c->Send(json{{"type", "action"},
                     {"seq", rng.UniformInt(40)},
                     {"action", rng.UniformInt(cfg.NumActions())}}
                    .dump());
        std::this_thread::yield();
      }
    });
    std::thread reader([&, c = client_end.get()] {
      while (auto t = c->Receive()) {
        if (json::parse(*t)["type"] == "game_over") break;
      }
      done = true;
    });
    const auto rec = session.Run(*server_end);
    reader.join();
    spam.join();
    ASSERT_FALSE(rec.aborted);
    hanabi::Replay(rec);
    int64_t seq = 0;
    for (const auto& m : sent) {
      if (m["type"] == "move_made") {
        EXPECT_EQ(m["seq"], ++seq);
      } else {
        EXPECT_EQ(m["seq"], seq);
      }
    }
    for (size_t i = 1; i < rec.moves.size(); ++i) {
      EXPECT_NE(rec.moves[i].player, rec.moves[i - 1].player);
    }
  }
}

// ---------------------------------------------------------------------------
// Websocket server.

TEST(WebServer, ServesStaticFilesAndSessions) {
  const GameConfig cfg = GameConfig::Mini(2, 4);
  auto agent = std::make_shared<policy::ScriptedPolicy>(cfg, policy::Skill::kStrong, 0.0);
  const std::string web = ::testing::TempDir() + "/pikl_web";
  std::filesystem::create_directories(web);
  std::ofstream(web + "/index.html") << "<html>hanabi</html>";
  std::ofstream(web + "/app.js") << "console.log(1)";

  std::mutex mu;
  std::vector<hanabi::GameRecord> records;
  harness::ServerOptions so;
  so.port = 0;
  so.web_dir = web;
  harness::WebServer server(so, [&](harness::Transport& t, int64_t id) {
    harness::PlaySession s(agent, FastOptions(1000 + id, id % 2));
    auto rec = s.Run(t);
    std::lock_guard<std::mutex> lock(mu);
    records.push_back(std::move(rec));
  });
  server.Start();
  const uint16_t port = server.port();

  EXPECT_EQ(harness::HttpGet("127.0.0.1", port, "/"), std::make_pair(200, std::string("<html>hanabi</html>")));
  EXPECT_EQ(harness::HttpGet("127.0.0.1", port, "/app.js").first, 200);
  EXPECT_EQ(harness::HttpGet("127.0.0.1", port, "/missing.txt").first, 404);
  EXPECT_EQ(harness::HttpGet("127.0.0.1", port, "/../etc/passwd").first, 404);

  std::vector<int> scores;
  for (int g = 0; g < 3; ++g) {
    auto t = harness::ConnectWebSocket("127.0.0.1", port);
    const auto bot = harness::RunBotClient(*t, RandomChooser(g));
    ASSERT_TRUE(bot.score.has_value());
    scores.push_back(*bot.score);
    t->Close();
  }
  server.Stop();
  ASSERT_EQ(records.size(), 3u);
  std::sort(records.begin(), records.end(),
            [](const auto& a, const auto& b) { return a.seed < b.seed; });
  for (int g = 0; g < 3; ++g) {
    EXPECT_EQ(hanabi::Replay(records[g]).status().final_score, scores[g]);
  }
}

// ---------------------------------------------------------------------------
// Run config and policy specs.

TEST(RunConfig, RoundTripsAndRejectsBadInput) {
  harness::RunConfig c;
  c.game = GameConfig::Mini(2, 3);
  c.eval_games = 17;
  const json j = c.ToJson();
  EXPECT_EQ(harness::RunConfig::FromJson(j).ToJson(), j);

  json no_version = j;
  no_version.erase("schema_version");
  EXPECT_THROW(harness::RunConfig::FromJson(no_version), ConfigError);
  json wrong_version = j;
  wrong_version["schema_version"] = harness::kConfigSchemaVersion + 1;
  EXPECT_THROW(harness::RunConfig::FromJson(wrong_version), ConfigError);
  json typo = j;
  typo["breval"] = json::object();
  EXPECT_THROW(harness::RunConfig::FromJson(typo), ConfigError);
  json bad_type = j;
  bad_type["eval"]["games"] = "many";
  EXPECT_THROW(harness::RunConfig::FromJson(bad_type), ConfigError);
  json zero = j;
  zero["eval"]["games"] = 0;
  EXPECT_THROW(harness::RunConfig::FromJson(zero), ConfigError);
  EXPECT_THROW(harness::RunConfig::Load("/nonexistent/run.json"), ConfigError);
}

TEST(RunConfig, MissingSectionsKeepDefaults) {
  const auto c = harness::RunConfig::FromJson({{"schema_version", harness::kConfigSchemaVersion}});
  EXPECT_EQ(c.ToJson(), harness::RunConfig{}.ToJson());
}

TEST(PolicySpec, BuiltinsAndCheckpoints) {
  const auto cfg = GameConfig::Mini(2, 3);
  EXPECT_EQ(harness::LoadPolicySpec("uniform", cfg)->Name(), policy::UniformPolicy(cfg).Name());
  const auto s = harness::LoadPolicySpec("scripted:strong:0.2", cfg);
  const policy::ScriptedPolicy ref(cfg, policy::Skill::kStrong, 0.2);
  const auto obs = hanabi::Observe(hanabi::NewGame(cfg, 3), 0);
  EXPECT_EQ(s->Probs(hanabi::AohView(&obs, 1), std::nullopt),
            ref.Probs(hanabi::AohView(&obs, 1), std::nullopt));
  EXPECT_THROW(harness::LoadPolicySpec("scripted:strong:x", cfg), ConfigError);
  EXPECT_THROW(harness::LoadPolicySpec("scripted:genius", cfg), ConfigError);

  const auto dir = std::filesystem::temp_directory_path() / "pikl_spec_test";
  std::filesystem::create_directories(dir);
  const policy::Mlp net({policy::FeatureEncoder(cfg, {}).size(), 8, cfg.NumActions()}, 4);
  const br::QPolicy q(cfg, net, nullptr, 0.0);
  const std::string path = (dir / "q.json").string();
  policy::SaveCheckpoint(q.ToCheckpoint(), path);
  const auto loaded = harness::LoadPolicySpec(path, cfg);
  EXPECT_EQ(loaded->Probs(hanabi::AohView(&obs, 1), std::nullopt),
            q.Probs(hanabi::AohView(&obs, 1), std::nullopt));
  EXPECT_THROW(harness::LoadPolicySpec(path, GameConfig::Mini(2, 4)), ConfigError);
  EXPECT_THROW(harness::LoadBeliefSpec(path, cfg), FormatError);
  EXPECT_NE(harness::LoadBeliefSpec("count-prior", cfg), nullptr);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace pikl
