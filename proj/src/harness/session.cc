#include "pikl/harness/session.h"

#include <chrono>
#include <thread>

#include "pikl/errors.h"
#include "pikl/search/search.h"

namespace pikl::harness {

using hanabi::Action;
using hanabi::GameState;
using hanabi::Observation;
using nlohmann::json;

namespace {

struct Pipe {
  std::mutex mu;
  std::condition_variable cv;
  std::deque<std::string> queue[2];
  bool closed = false;
};

class InMemoryEndpoint : public Transport {
 public:
  InMemoryEndpoint(std::shared_ptr<Pipe> pipe, int side) : pipe_(std::move(pipe)), side_(side) {}
  ~InMemoryEndpoint() override { Close(); }

  void Send(const std::string& text) override {
    std::lock_guard<std::mutex> lock(pipe_->mu);
    if (pipe_->closed) return;
    pipe_->queue[1 - side_].push_back(text);
    pipe_->cv.notify_all();
  }
  std::optional<std::string> Receive() override {
    std::unique_lock<std::mutex> lock(pipe_->mu);
    auto& q = pipe_->queue[side_];
    pipe_->cv.wait(lock, [&] { return !q.empty() || pipe_->closed; });
    if (q.empty()) return std::nullopt;
    std::string s = std::move(q.front());
    q.pop_front();
    return s;
  }
  void Close() override {
    std::lock_guard<std::mutex> lock(pipe_->mu);
    pipe_->closed = true;
    pipe_->cv.notify_all();
  }

 private:
  std::shared_ptr<Pipe> pipe_;
  int side_;
};

bool IsCard(const json& j) { return j.is_object() && j.contains("color") && j.contains("rank"); }

void Walk(const json& j, std::vector<std::string>& path) {
  if (IsCard(j)) {
    const size_t n = path.size();
    const bool ok = (n == 3 && path[0] == "view" &&
                     (path[1] == "partner_hand" || path[1] == "discards")) ||
                    (n == 3 && path[0] == "view" && path[1] == "last_move" &&
                     path[2] == "revealed") ||
                    (n == 1 && path[0] == "revealed");
    if (!ok) {
      std::string where;
      for (const auto& p : path) where += "/" + p;
      throw UsageError("outbound message exposes a card at " + where);
    }
    return;
  }
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      path.push_back(it.key());
      Walk(it.value(), path);
      path.pop_back();
    }
  } else if (j.is_array()) {
    for (size_t i = 0; i < j.size(); ++i) {
      path.push_back(std::to_string(i));
      Walk(j[i], path);
      path.pop_back();
    }
  }
}

json CardOrNull(hanabi::Card c) {
  if (!c.valid()) return nullptr;
  return {{"color", c.color}, {"rank", c.rank}};
}

}  // namespace

std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> InMemoryPair() {
  auto pipe = std::make_shared<Pipe>();
  return {std::make_unique<InMemoryEndpoint>(pipe, 0), std::make_unique<InMemoryEndpoint>(pipe, 1)};
}

std::string AgentKindName(AgentKind k) {
  return k == AgentKind::kBrBaseline ? "br_baseline" : "pikl_test_time";
}

AgentKind AgentKindFromName(const std::string& name) {
  if (name == "br_baseline") return AgentKind::kBrBaseline;
  if (name == "pikl_test_time") return AgentKind::kPiklTestTime;
  throw ConfigError("unknown agent kind: " + name);
}

void CheckOutbound(const json& msg) {
  std::vector<std::string> path;
  // move_made may only reveal a card that left a hand.
  if (msg.value("type", "") == "move_made" && msg.contains("revealed") &&
      !msg["revealed"].is_null()) {
    const json& a = msg.at("action");
    if (!(a.contains("Play") || a.contains("Discard"))) {
      throw UsageError("move_made reveals a card for a hint");
    }
  }
  Walk(msg, path);
}

json LegalActionsJson(const hanabi::GameConfig& config, uint64_t mask) {
  json out = json::array();
  for (int i = 0; i < config.NumActions(); ++i) {
    if ((mask >> i) & 1u) {
      out.push_back({{"index", i}, {"action", hanabi::ActionToJson(Action::FromIndex(config, i))}});
    }
  }
  return out;
}

PlaySession::PlaySession(policy::PolicyPtr agent, SessionOptions options)
    : agent_(std::move(agent)), options_(std::move(options)), rng_(DeriveSeed(options_.seed, 9)) {
  if (!agent_) throw UsageError("session needs an agent");
  if (options_.human_seat != 0 && options_.human_seat != 1) {
    throw UsageError("human seat must be 0 or 1");
  }
  options_.think.Validate();
  if (!options_.sleep) {
    options_.sleep = [](double s) { std::this_thread::sleep_for(std::chrono::duration<double>(s)); };
  }
  state_.session_id = options_.session_id;
  state_.human_seat = options_.human_seat;
  state_.agent_seat = 1 - options_.human_seat;
  state_.agent_kind = options_.agent_kind;
}

void PlaySession::Send(Transport& t, json msg) {
  msg["seq"] = state_.seq;
  CheckOutbound(msg);
  if (options_.on_send) options_.on_send(msg);
  t.Send(msg.dump());
}

std::pair<int, std::vector<double>> PlaySession::AgentMove(hanabi::AohView aoh) {
  const int na = agent_->config().NumActions();
  if (const auto* sp = dynamic_cast<const search::SearchPolicy*>(agent_.get())) {
    const search::Decision d = sp->Decide(aoh);
    return {d.action, d.q.Dense(na)};
  }
  const hanabi::AohView view = agent_->Markov() ? aoh.last(1) : aoh;
  const policy::ActionProbs p = agent_->Probs(view, options_.agent_lambda);
  const int a = policy::MaskedArgmax(p, aoh.back().legal_mask);
  if (auto v = agent_->Values(view, options_.agent_lambda)) return {a, std::move(*v)};
  std::vector<double> logp(na);
  for (int i = 0; i < na; ++i) logp[i] = p[i] > 0.0 ? std::log(p[i]) : -INFINITY;
  return {a, logp};
}

hanabi::GameRecord PlaySession::Run(Transport& transport) {
  const hanabi::GameConfig& cfg = agent_->config();
  const int human = state_.human_seat;
  const int agent = state_.agent_seat;
  GameState s = hanabi::NewGame(cfg, options_.seed);
  hanabi::GameRecord rec = hanabi::BeginRecord(s, options_.seed);
  std::vector<Observation> agent_aoh = {hanabi::Observe(s, agent)};
  state_.seq = 0;

  auto reject = [&](const char* code, const std::string& why) {
    Send(transport, {{"type", "action_rejected"}, {"code", code}, {"message", why}});
  };

  Send(transport, {{"type", "hello"},
                   {"protocol", kProtocolVersion},
                   {"session", state_.session_id},
                   {"config", cfg.ToJson()},
                   {"seat", human},
                   {"agent", AgentKindName(state_.agent_kind)}});
  while (true) {
    Send(transport, {{"type", "observation"}, {"view", hanabi::Observe(s, human).ToJson()}});
    if (s.terminal()) {
      Send(transport, {{"type", "game_over"},
                       {"score", s.status().final_score},
                       {"reason", hanabi::TerminationName(s.status().kind)}});
      return rec;
    }
    const int p = s.active_player();
    int a = -1;
    if (p == human) {
      const uint64_t mask = s.LegalMask();
      Send(transport, {{"type", "your_turn"}, {"legal_actions", LegalActionsJson(cfg, mask)}});
      while (a < 0) {
        const std::optional<std::string> text = transport.Receive();
        if (!text) {
          rec.aborted = true;
          return rec;
        }
        json msg;
        try {
          msg = json::parse(*text);
        } catch (const json::exception&) {
          reject(kMalformed, "not JSON");
          continue;
        }
        if (!msg.is_object()) {
          reject(kMalformed, "expected an object");
          continue;
        }
        const std::string type = msg.value("type", "");
        if (type == "ping") {
          Send(transport, {{"type", "pong"}});
          continue;
        }
        if (type != "action" || !msg.contains("action")) {
          reject(kMalformed, "expected an action message");
          continue;
        }
        if (msg.contains("seq") && (!msg["seq"].is_number_integer() ||
                                    msg["seq"].get<int64_t>() != state_.seq)) {
          reject(kStaleSeq, "action does not answer the current turn");
          continue;
        }
        int idx;
        try {
          idx = hanabi::ActionFromJson(cfg, msg["action"]).ToIndex(cfg);
        } catch (const FormatError& e) {
          reject(kIllegalAction, e.what());
          continue;
        }
        if (!((mask >> idx) & 1u)) {
          reject(kIllegalAction, "not a legal action now");
          continue;
        }
        a = idx;
      }
    } else {
      auto [act, values] = AgentMove(agent_aoh);
      options_.sleep(ThinkTime(values, options_.think, &rng_));
      a = act;
    }
    const Action action = Action::FromIndex(cfg, a);
    hanabi::RecordStep(rec, p, action, s.Apply(action));
    ++state_.seq;
    agent_aoh.push_back(hanabi::Observe(s, agent));
    const hanabi::MoveInfo& m = *s.last_move();
    json slots = json::array();
    for (int i = 0; i < hanabi::kMaxHandSize; ++i) {
      if ((m.hinted_slots >> i) & 1u) slots.push_back(i);
    }
    Send(transport, {{"type", "move_made"},
                     {"player", p},
                     {"action", hanabi::ActionToJson(action)},
                     {"index", a},
                     {"revealed", CardOrNull(m.revealed)},
                     {"success", m.success},
                     {"hinted_slots", slots}});
  }
}

BotResult RunBotClient(Transport& transport,
                       const std::function<json(const json&, const json&)>& choose) {
  BotResult r;
  json view, turn;
  auto act = [&]() {
    transport.Send(
        json{{"type", "action"}, {"seq", turn["seq"]}, {"action", choose(turn, view)}}.dump());
  };
  while (const std::optional<std::string> text = transport.Receive()) {
    json msg = json::parse(*text);
    r.inbound.push_back(msg);
    const std::string type = msg.value("type", "");
    if (type == "observation") {
      view = msg["view"];
    } else if (type == "your_turn") {
      turn = msg;
      act();
    } else if (type == "action_rejected") {
      ++r.rejections;
      act();
    } else if (type == "game_over") {
      r.score = msg["score"].get<int>();
      r.reason = msg["reason"].get<std::string>();
      break;
    }
  }
  return r;
}

}  // namespace pikl::harness
