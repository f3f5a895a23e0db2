#ifndef PIKL_HARNESS_SESSION_H_
#define PIKL_HARNESS_SESSION_H_

#include <condition_variable>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>

#include "json.hpp"
#include "pikl/hanabi/record.h"
#include "pikl/harness/think_time.h"
#include "pikl/policy/policy.h"

namespace pikl::harness {

inline constexpr int kProtocolVersion = 1;

// Rejection codes carried by action_rejected.
inline constexpr const char* kIllegalAction = "ILLEGAL_ACTION";
inline constexpr const char* kMalformed = "MALFORMED";
inline constexpr const char* kStaleSeq = "STALE_SEQ";

// A bidirectional text-message channel. Receive blocks; nullopt means the
// peer is gone.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual void Send(const std::string& text) = 0;
  virtual std::optional<std::string> Receive() = 0;
  virtual void Close() = 0;
};

// Two connected in-process endpoints.
std::pair<std::unique_ptr<Transport>, std::unique_ptr<Transport>> InMemoryPair();

enum class AgentKind { kBrBaseline, kPiklTestTime };
std::string AgentKindName(AgentKind k);
AgentKind AgentKindFromName(const std::string& name);  // throws ConfigError

struct SessionOptions {
  std::string session_id = "session";
  int human_seat = 0;
  AgentKind agent_kind = AgentKind::kPiklTestTime;
  uint64_t seed = 0;
  std::optional<double> agent_lambda;
  ThinkTimeConfig think;
  // Waits out the agent's think time; tests replace it.
  std::function<void(double seconds)> sleep;
  // Called with every outbound message after the leak check.
  std::function<void(const nlohmann::json&)> on_send;
};

// Throws UsageError if an outbound message carries a card identity outside
// the places the human may see one: the partner's hand, the discard pile,
// and the card revealed by a play or discard.
void CheckOutbound(const nlohmann::json& msg);

struct SessionState {
  std::string session_id;
  int human_seat = 0;
  int agent_seat = 1;
  AgentKind agent_kind = AgentKind::kPiklTestTime;
  int64_t seq = 0;  // moves applied so far
};

// One game between a remote human and the agent, driven as a single
// serialized loop over `transport`. Returns the record; a disconnect leaves
// it marked aborted.
class PlaySession {
 public:
  PlaySession(policy::PolicyPtr agent, SessionOptions options);
  hanabi::GameRecord Run(Transport& transport);
  const SessionState& state() const { return state_; }

 private:
  void Send(Transport& t, nlohmann::json msg);
  // Agent action plus the values used for its think time.
  std::pair<int, std::vector<double>> AgentMove(hanabi::AohView aoh);

  policy::PolicyPtr agent_;
  SessionOptions options_;
  SessionState state_;
  Rng rng_;
};

// Message builders shared by the server and the bot client.
nlohmann::json LegalActionsJson(const hanabi::GameConfig& config, uint64_t mask);

// Plays the human seat over `transport` like a browser client would: answers
// every your_turn with an action picked by `choose` from the listed legal
// indices and the current view. Returns the transcript of inbound messages.
struct BotResult {
  std::vector<nlohmann::json> inbound;
  std::optional<int> score;
  std::string reason;
  int rejections = 0;
};
BotResult RunBotClient(Transport& transport,
                       const std::function<nlohmann::json(const nlohmann::json& your_turn,
                                                          const nlohmann::json& view)>& choose);

}  // namespace pikl::harness

#endif  // PIKL_HARNESS_SESSION_H_
