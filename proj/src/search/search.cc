#include "pikl/search/search.h"

#include <chrono>
#include <cstdio>
#include <cmath>
#include <limits>

#include "pikl/errors.h"
#include "pikl/hanabi/state.h"

namespace pikl::search {

using hanabi::Action;
using hanabi::Card;
using hanabi::GameState;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<Card> HiddenDeck(const Observation& obs, const belief::Hand& hand, Rng& rng) {
  hanabi::CardCounts unseen = hanabi::UnseenCounts(obs);
  const int nr = obs.config->NumRanks();
  for (const Card& c : hand) {
    uint8_t& k = unseen[c.Index(nr)];
    if (k == 0) throw BeliefError("sampled hand is not count-consistent");
    --k;
  }
  std::vector<Card> deck;
  deck.reserve(obs.deck_size);
  for (int t = 0; t < obs.config->NumCardTypes(); ++t) {
    for (int k = 0; k < unseen[t]; ++k) deck.push_back(Card::FromIndex(t, nr));
  }
  if (static_cast<int>(deck.size()) != obs.deck_size) {
    throw BeliefError("sampled hand leaves the wrong number of deck cards");
  }
  rng.Shuffle(std::span<Card>(deck));
  return deck;
}

struct Rollout {
  GameState state;
  int slot;  // index into QEstimate::actions
  double ret = 0.0;
};

}  // namespace

void SearchParams::Validate(int num_legal) const {
  if (!(lambda > 0.0)) throw UsageError("search lambda must be positive");
  if (!partner_model || !rollout_policy || !anchor_policy) {
    throw UsageError("search needs partner, rollout and anchor policies");
  }
  if (!partner_model->Markov() || !rollout_policy->Markov()) {
    throw UsageError("rollout policies must be Markov");
  }
  if (rollouts_M < num_legal) {
    throw UsageError("rollout budget " + std::to_string(rollouts_M) + " is below the " +
                     std::to_string(num_legal) + " legal actions");
  }
}

int QEstimate::total() const {
  int t = 0;
  for (int c : count) t += c;
  return t;
}

std::vector<double> QEstimate::Dense(int num_actions) const {
  std::vector<double> q(num_actions, kNegInf);
  for (size_t i = 0; i < actions.size(); ++i) q[actions[i]] = mean[i];
  return q;
}

QEstimate EstimateQ(AohView aoh, const belief::BeliefModel& belief, const SearchParams& params,
                    Rng& rng) {
  if (aoh.empty()) throw UsageError("empty AOH");
  const Observation& now = aoh.back();
  if (!now.my_turn()) throw UsageError("search called off-turn");
  const hanabi::GameConfig& cfg = *now.config;
  const int me = now.observer;

  QEstimate q;
  for (int a = 0; a < cfg.NumActions(); ++a) {
    if ((now.legal_mask >> a) & 1u) q.actions.push_back(a);
  }
  const int n_actions = static_cast<int>(q.actions.size());
  params.Validate(n_actions);
  q.requested = params.rollouts_M;
  q.mean.assign(n_actions, 0.0);
  q.stderr_of_mean.assign(n_actions, 0.0);
  q.count.assign(n_actions, 0);

  std::vector<Rollout> rollouts;
  rollouts.reserve(params.rollouts_M);
  // One set of sampled worlds (hand + deck order) is shared by every
  // action: action i takes the first want_i of them.
  const int base = params.rollouts_M / n_actions;
  const int extra = params.rollouts_M % n_actions;
  const int worlds = base + (extra > 0 ? 1 : 0);
  belief::SampleResult got = belief.SampleUpTo(
      aoh, worlds, static_cast<int64_t>(belief::kRejectionFactor) * worlds, rng);
  if (got.hands.empty()) {
    throw BeliefError("no valid hand sampled (acceptance rate " +
                      std::to_string(got.acceptance_rate()) + ")");
  }
  std::vector<std::vector<Card>> decks;
  for (const belief::Hand& hand : got.hands) decks.push_back(HiddenDeck(now, hand, rng));
  for (int i = 0; i < n_actions; ++i) {
    const int want = base + (i < extra ? 1 : 0);
    const int have = std::min(want, static_cast<int>(got.hands.size()));
    q.shortfall += want - have;
    const Action forced = Action::FromIndex(cfg, q.actions[i]);
    for (int w = 0; w < have; ++w) {
      Rollout r{GameState::FromView(now, got.hands[w], decks[w]), i, 0.0};
      r.ret = r.state.Apply(forced).reward;
      rollouts.push_back(std::move(r));
    }
  }

  // Lockstep: every live rollout moves once per round, so all rollouts on
  // one seat share a single batched policy call.
  std::vector<size_t> live;
  for (size_t i = 0; i < rollouts.size(); ++i) {
    if (!rollouts[i].state.terminal()) live.push_back(i);
  }
  std::vector<Observation> obs;
  std::vector<const Observation*> ptrs;
  std::vector<size_t> group;
  std::vector<policy::ActionProbs> probs;
  while (!live.empty()) {
    for (int seat = 0; seat < hanabi::kNumPlayers; ++seat) {
      group.clear();
      for (size_t i : live) {
        const GameState& st = rollouts[i].state;
        if (!st.terminal() && st.active_player() == seat) group.push_back(i);
      }
      if (group.empty()) continue;
      obs.clear();
      for (size_t i : group) obs.push_back(hanabi::Observe(rollouts[i].state, seat));
      ptrs.clear();
      for (const Observation& o : obs) ptrs.push_back(&o);
      const bool mine = seat == me;
      const policy::Policy& pol = mine ? *params.rollout_policy : *params.partner_model;
      pol.BatchProbs(ptrs, mine ? params.rollout_lambda : params.partner_lambda, &probs);
      for (size_t g = 0; g < group.size(); ++g) {
        const int a = params.sample_rollouts ? policy::SampleIndex(probs[g], rng)
                                             : policy::MaskedArgmax(probs[g], obs[g].legal_mask);
        Rollout& r = rollouts[group[g]];
        r.ret += r.state.Apply(Action::FromIndex(cfg, a)).reward;
      }
    }
    size_t k = 0;
    for (size_t i : live) {
      if (!rollouts[i].state.terminal()) live[k++] = i;
    }
    live.resize(k);
  }

  // Fixed-order reduction.
  std::vector<double> sum(n_actions, 0.0), sum_sq(n_actions, 0.0);
  for (const Rollout& r : rollouts) {
    sum[r.slot] += r.ret;
    sum_sq[r.slot] += r.ret * r.ret;
    ++q.count[r.slot];
  }
  for (int i = 0; i < n_actions; ++i) {
    const double n = q.count[i];
    q.mean[i] = sum[i] / n;
    if (n > 1) {
      const double var = std::max(0.0, (sum_sq[i] - n * q.mean[i] * q.mean[i]) / (n - 1));
      q.stderr_of_mean[i] = std::sqrt(var / n);
    }
  }
  return q;
}

namespace {

std::vector<double> Scores(std::span<const double> q, std::span<const double> anchor,
                           double weight_log, double weight_q, uint64_t legal_mask) {
  if (q.size() != anchor.size()) throw UsageError("Q and anchor sizes differ");
  std::vector<double> s(q.size(), kNegInf);
  bool any = false;
  for (size_t a = 0; a < q.size(); ++a) {
    if (!((legal_mask >> a) & 1u)) continue;
    if (!(anchor[a] > 0.0) || !std::isfinite(q[a])) continue;
    s[a] = weight_log * std::log(anchor[a]) + weight_q * q[a];
    any = true;
  }
  if (!any) throw UsageError("degenerate anchor: no legal action with positive probability");
  return s;
}

}  // namespace

std::vector<double> PiklDistribution(std::span<const double> q, std::span<const double> anchor,
                                      double lambda, uint64_t legal_mask) {
  if (!(lambda > 0.0)) throw UsageError("lambda must be positive");
  std::vector<double> s = Scores(q, anchor, 1.0, 1.0 / lambda, legal_mask);
  double hi = kNegInf;
  for (double v : s) hi = std::max(hi, v);
  double z = 0.0;
  for (double& v : s) {
    v = std::isfinite(v) ? std::exp(v - hi) : 0.0;
    z += v;
  }
  for (double& v : s) v /= z;
  return s;
}

int PiklGreedy(std::span<const double> q, std::span<const double> anchor, double lambda,
               uint64_t legal_mask) {
  if (!(lambda > 0.0)) throw UsageError("lambda must be positive");
  const std::vector<double> s = Scores(q, anchor, lambda, 1.0, legal_mask);
  int best = -1;
  for (size_t a = 0; a < s.size(); ++a) {
    if (std::isfinite(s[a]) && (best < 0 || s[a] > s[best])) best = static_cast<int>(a);
  }
  return best;
}

nlohmann::json Decision::TraceJson(uint64_t aoh_hash, double lambda) const {
  nlohmann::json qs = nlohmann::json::array();
  for (size_t i = 0; i < q.actions.size(); ++i) {
    qs.push_back({{"action", q.actions[i]},
                  {"q", q.mean[i]},
                  {"se", q.stderr_of_mean[i]},
                  {"n", q.count[i]},
                  {"anchor", anchor[q.actions[i]]}});
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(aoh_hash));
  return {{"aoh_hash", hex},     {"lambda", lambda},       {"per_action", qs},
          {"chosen", action},    {"shortfall", q.shortfall}, {"wall_time", wall_seconds}};
}

Decision PiklDecide(AohView aoh, const belief::BeliefModel& belief, const SearchParams& params,
                    Rng& rng) {
  const auto t0 = std::chrono::steady_clock::now();
  Decision d;
  d.q = EstimateQ(aoh, belief, params, rng);
  const Observation& now = aoh.back();
  const int na = now.config->NumActions();
  d.anchor = params.anchor_policy->Probs(aoh, params.anchor_lambda);
  const std::vector<double> dense = d.q.Dense(na);
  if (params.mode == ActMode::kGreedy) {
    d.action = PiklGreedy(dense, d.anchor, params.lambda, now.legal_mask);
    d.probs.assign(na, 0.0);
    d.probs[d.action] = 1.0;
  } else {
    d.probs = PiklDistribution(dense, d.anchor, params.lambda, now.legal_mask);
    d.action = policy::SampleIndex(d.probs, rng);
  }
  d.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return d;
}

Action PiklAct(AohView aoh, const belief::BeliefModel& belief, const SearchParams& params,
               Rng& rng) {
  const Decision d = PiklDecide(aoh, belief, params, rng);
  return Action::FromIndex(*aoh.back().config, d.action);
}

uint64_t AohHash(AohView aoh) {
  uint64_t h = 0x6a09e667f3bcc908ULL;
  for (const Observation& o : aoh) h = SplitMix64(h ^ o.Hash());
  return h;
}

SearchPolicy::SearchPolicy(SearchParams params, belief::BeliefPtr belief, uint64_t seed,
                           std::string name)
    : params_(std::move(params)), belief_(std::move(belief)), seed_(seed), name_(std::move(name)) {
  if (!belief_) throw UsageError("search policy needs a belief model");
  params_.Validate(1);
}

const hanabi::GameConfig& SearchPolicy::config() const { return params_.anchor_policy->config(); }

Decision SearchPolicy::Decide(AohView aoh) const {
  const uint64_t h = AohHash(aoh);
  Rng rng(DeriveSeed(seed_, h));
  Decision d = PiklDecide(aoh, *belief_, params_, rng);
  if (trace_ != nullptr) *trace_ << d.TraceJson(h, params_.lambda).dump() << '\n';
  return d;
}

policy::ActionProbs SearchPolicy::Probs(AohView aoh, std::optional<double>) const {
  return Decide(aoh).probs;
}

std::optional<std::vector<double>> SearchPolicy::Values(AohView aoh,
                                                        std::optional<double>) const {
  return Decide(aoh).q.Dense(aoh.back().config->NumActions());
}

std::shared_ptr<SearchPolicy> TestTimeAgent(policy::PolicyPtr br, policy::PolicyPtr partner,
                                            belief::BeliefPtr belief, double lambda,
                                            int rollouts, uint64_t seed) {
  SearchParams p;
  p.lambda = lambda;
  p.rollouts_M = rollouts;
  p.mode = ActMode::kGreedy;
  p.partner_model = std::move(partner);
  p.rollout_policy = br;
  p.anchor_policy = br;
  return std::make_shared<SearchPolicy>(std::move(p), std::move(belief), seed, "pikl-test-time");
}

}  // namespace pikl::search
