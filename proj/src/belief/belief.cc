#include "pikl/belief/belief.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "pikl/errors.h"
#include "pikl/hanabi/state.h"

namespace pikl::belief {

using hanabi::CardCounts;
using hanabi::GameConfig;
using hanabi::GameState;

namespace {
constexpr float kNegInf = -std::numeric_limits<float>::infinity();
}

bool IsConsistent(const Observation& obs, const Hand& hand) {
  if (static_cast<int>(hand.size()) != obs.own_hand_size()) return false;
  const int ranks = obs.config->NumRanks();
  CardCounts avail = hanabi::UnseenCounts(obs);
  for (size_t s = 0; s < hand.size(); ++s) {
    const Card c = hand[s];
    if (!c.valid() || c.color >= obs.config->colors || c.rank >= ranks) return false;
    if (!obs.own_knowledge[s].Allows(c)) return false;
    uint8_t& n = avail[c.Index(ranks)];
    if (n == 0) return false;
    --n;
  }
  return true;
}

std::vector<Hand> SampleHands(const BeliefModel& belief, AohView aoh, int n, Rng& rng) {
  if (n < 1) throw UsageError("need at least one hand");
  const int64_t cap = static_cast<int64_t>(kRejectionFactor) * n;
  SampleResult r = belief.SampleUpTo(aoh, n, cap, rng);
  if (static_cast<int>(r.hands.size()) < n) {
    throw BeliefError(belief.Name() + " belief accepted " + std::to_string(r.hands.size()) +
                      " of " + std::to_string(r.attempts) + " proposals (acceptance rate " +
                      std::to_string(r.acceptance_rate()) + "), needed " + std::to_string(n));
  }
  return std::move(r.hands);
}

// ---------------------------------------------------------------------------
// Exact enumeration.

std::vector<WeightedHand> EnumerateCandidates(const Observation& obs, int64_t cap) {
  const GameConfig& cfg = *obs.config;
  const int ranks = cfg.NumRanks();
  const int types = cfg.NumCardTypes();
  const int h = obs.own_hand_size();
  CardCounts avail = hanabi::UnseenCounts(obs);
  std::vector<WeightedHand> out;
  Hand cur(h);
  // Depth-first over slots; weight is the falling-factorial count of
  // physical-card assignments.
  auto rec = [&](auto&& self, int slot, double w) -> void {
    if (slot == h) {
      if (static_cast<int64_t>(out.size()) >= cap) {
        throw BeliefError("exact belief exceeds " + std::to_string(cap) +
                          " candidate hands; use a learned belief for this config");
      }
      out.push_back({cur, w});
      return;
    }
    for (int t = 0; t < types; ++t) {
      if (avail[t] == 0) continue;
      const Card c = Card::FromIndex(t, ranks);
      if (!obs.own_knowledge[slot].Allows(c)) continue;
      cur[slot] = c;
      const double k = avail[t];
      --avail[t];
      self(self, slot + 1, w * k);
      ++avail[t];
    }
  };
  rec(rec, 0, 1.0);
  return out;
}

double PartnerLikelihood(AohView aoh, const Hand& hand, const policy::Policy& partner) {
  if (aoh.empty() || aoh.front().turn != 0) {
    throw UsageError("exact belief needs the history from the deal");
  }
  if (!partner.Markov()) throw UsageError("exact belief needs a Markov partner policy");
  const Observation& first = aoh.front();
  const Observation& now = aoh.back();
  const GameConfig& cfg = *first.config;
  const int ranks = cfg.NumRanks();
  const int me = now.observer;
  const int other = now.partner();
  const int hs = cfg.hand_size;

  // Deck positions: seat 0's deal, seat 1's deal, then draws in order. My
  // cards are symbolic ids until revealed or assigned from the hypothesis.
  std::vector<Card> deck;
  std::vector<int> my_ids;         // per current slot: index into `deck`
  deck.resize(2 * hs);
  for (int i = 0; i < hs; ++i) {
    deck[other * hs + i] = first.partner_hand[i];
    my_ids.push_back(me * hs + i);
  }
  for (size_t i = 1; i < aoh.size(); ++i) {
    const auto& m = aoh[i].last_move;
    if (!m) throw UsageError("history entry without a move");
    const bool leaves = !m->action.IsHint();
    if (m->player == me) {
      if (leaves) {
        const int slot = m->action.value;
        deck[my_ids[slot]] = m->revealed;
        my_ids.erase(my_ids.begin() + slot);
        if (m->drew) {
          my_ids.push_back(static_cast<int>(deck.size()));
          deck.emplace_back();
        }
      }
    } else if (leaves && m->drew) {
      deck.push_back(aoh[i].partner_hand.back());
    }
  }
  if (my_ids.size() != hand.size()) return 0.0;
  for (size_t s = 0; s < hand.size(); ++s) deck[my_ids[s]] = hand[s];

  CardCounts left = hanabi::FullDeckCounts(cfg);
  for (const Card& c : deck) {
    uint8_t& n = left[c.Index(ranks)];
    if (n == 0) return 0.0;
    --n;
  }
  for (int t = 0; t < cfg.NumCardTypes(); ++t) {
    for (int k = 0; k < left[t]; ++k) deck.push_back(Card::FromIndex(t, ranks));
  }

  GameState s = GameState::FromDeckOrder(now.config, deck);
  double like = 1.0;
  for (size_t i = 1; i < aoh.size(); ++i) {
    const auto& m = *aoh[i].last_move;
    if (s.active_player() != m.player || !s.IsLegal(m.action)) return 0.0;
    if (m.player == other) {
      const Observation view = hanabi::Observe(s, other);
      const policy::ActionProbs p = partner.Probs(AohView(&view, 1), std::nullopt);
      like *= p[m.action.ToIndex(cfg)];
      if (like == 0.0) return 0.0;
    }
    s.Apply(m.action);
  }
  return like;
}

ExactBelief ExactBelief::Compute(AohView aoh, const policy::Policy& partner) {
  ExactBelief b;
  const Observation& now = aoh.back();
  std::vector<WeightedHand> cands = EnumerateCandidates(now);
  double total = 0.0;
  for (auto& c : cands) {
    c.weight *= PartnerLikelihood(aoh, c.hand, partner);
    if (c.weight > 0.0) {
      total += c.weight;
      b.support_.push_back(std::move(c));
    }
  }
  if (b.support_.empty() || !(total > 0.0)) {
    throw BeliefError("no hand hypothesis explains the partner's actions");
  }
  double acc = 0.0;
  for (auto& w : b.support_) {
    w.weight /= total;
    acc += w.weight;
    b.cumulative_.push_back(acc);
  }
  return b;
}

std::vector<std::vector<double>> ExactBelief::SlotMarginals(int num_card_types,
                                                            int num_ranks) const {
  const size_t h = support_.empty() ? 0 : support_.front().hand.size();
  std::vector<std::vector<double>> m(h, std::vector<double>(num_card_types, 0.0));
  for (const auto& w : support_) {
    for (size_t s = 0; s < h; ++s) m[s][w.hand[s].Index(num_ranks)] += w.weight;
  }
  return m;
}

Hand ExactBelief::Sample(Rng& rng) const {
  const double u = rng.Uniform() * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return support_[it - cumulative_.begin()].hand;
}

SampleResult ExactBeliefModel::SampleUpTo(AohView aoh, int n, int64_t, Rng& rng) const {
  const ExactBelief b = ExactBelief::Compute(aoh, *partner_);
  SampleResult r;
  for (int i = 0; i < n; ++i) r.hands.push_back(b.Sample(rng));
  r.attempts = n;
  return r;
}

SampleResult CountPriorBelief::SampleUpTo(AohView aoh, int n, int64_t max_attempts,
                                          Rng& rng) const {
  const Observation& obs = aoh.back();
  const int ranks = obs.config->NumRanks();
  const int types = obs.config->NumCardTypes();
  SampleResult r;
  std::vector<double> w(types);
  while (static_cast<int>(r.hands.size()) < n && r.attempts < max_attempts) {
    ++r.attempts;
    CardCounts avail = hanabi::UnseenCounts(obs);
    Hand hand;
    bool ok = true;
    for (int s = 0; s < obs.own_hand_size() && ok; ++s) {
      for (int t = 0; t < types; ++t) {
        w[t] = obs.own_knowledge[s].Allows(Card::FromIndex(t, ranks)) ? avail[t] : 0.0;
      }
      const size_t t = rng.Categorical(w);
      if (t == w.size()) {
        ok = false;
      } else {
        hand.push_back(Card::FromIndex(static_cast<int>(t), ranks));
        --avail[t];
      }
    }
    if (ok) r.hands.push_back(std::move(hand));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Learned belief.

LearnedBelief::LearnedBelief(const GameConfig& config, policy::Mlp net, bool count_prior)
    : config_(config), encoder_(config, {}), net_(std::move(net)), count_prior_(count_prior) {
  if (net_.input_size() != input_size() || net_.output_size() != vocab_size()) {
    throw UsageError("belief network shape does not match the config");
  }
}

void LearnedBelief::EncodeInput(std::span<const float> features, int slot,
                                std::span<const float> prev_counts, std::span<float> out) const {
  const int f = encoder_.size();
  std::copy(features.begin(), features.end(), out.begin());
  std::fill(out.begin() + f, out.begin() + f + config_.hand_size, 0.0f);
  out[f + slot] = 1.0f;
  std::copy(prev_counts.begin(), prev_counts.end(), out.begin() + f + config_.hand_size);
}

void LearnedBelief::PriorOffsets(const Observation& obs, const CardCounts& available, int slot,
                                 std::span<float> out) const {
  const int types = config_.NumCardTypes();
  const int ranks = config_.NumRanks();
  if (slot >= obs.own_hand_size()) {
    std::fill(out.begin(), out.end(), kNegInf);
    out[types] = 0.0f;
    return;
  }
  out[types] = kNegInf;
  for (int t = 0; t < types; ++t) {
    if (!count_prior_) {
      out[t] = 0.0f;
    } else if (available[t] > 0 && obs.own_knowledge[slot].Allows(Card::FromIndex(t, ranks))) {
      out[t] = std::log(static_cast<float>(available[t]));
    } else {
      out[t] = kNegInf;
    }
  }
}

namespace {

std::vector<double> SoftmaxWithOffsets(std::span<const float> logits,
                                       std::span<const float> offsets) {
  std::vector<double> p(logits.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < p.size(); ++i) {
    p[i] = static_cast<double>(logits[i]) + offsets[i];
    mx = std::max(mx, p[i]);
  }
  if (!std::isfinite(mx)) {
    std::fill(p.begin(), p.end(), 0.0);
    return p;
  }
  double z = 0.0;
  for (double& x : p) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : p) x /= z;
  return p;
}

}  // namespace

std::vector<double> LearnedBelief::Conditional(const Observation& obs,
                                               std::span<const Card> prefix, int slot) const {
  const int types = config_.NumCardTypes();
  const int ranks = config_.NumRanks();
  std::vector<float> feat(encoder_.size());
  encoder_.EncodeInto(obs, std::nullopt, feat);
  std::vector<float> prev(types, 0.0f);
  CardCounts avail = hanabi::UnseenCounts(obs);
  for (const Card& c : prefix) {
    prev[c.Index(ranks)] += 1.0f;
    if (avail[c.Index(ranks)] > 0) --avail[c.Index(ranks)];
  }
  std::vector<float> x(input_size());
  EncodeInput(feat, slot, prev, x);
  const policy::Vector logits = net_.Forward(x);
  std::vector<float> off(vocab_size());
  PriorOffsets(obs, avail, slot, off);
  return SoftmaxWithOffsets(std::span<const float>(logits.data(), logits.size()), off);
}

double LearnedBelief::LogLikelihood(const Observation& obs, const Hand& true_hand) const {
  double ll = 0.0;
  const int types = config_.NumCardTypes();
  for (int s = 0; s < config_.hand_size; ++s) {
    const int n = std::min<int>(s, static_cast<int>(true_hand.size()));
    const auto p = Conditional(obs, std::span<const Card>(true_hand.data(), n), s);
    const int target = s < static_cast<int>(true_hand.size())
                           ? true_hand[s].Index(config_.NumRanks())
                           : types;
    ll += std::log(p[target]);
  }
  return ll;
}

SampleResult LearnedBelief::SampleUpTo(AohView aoh, int n, int64_t max_attempts, Rng& rng) const {
  const Observation& obs = aoh.back();
  const int types = config_.NumCardTypes();
  const int ranks = config_.NumRanks();
  const int h = obs.own_hand_size();
  const int in = input_size();
  SampleResult r;
  std::vector<float> feat(encoder_.size());
  encoder_.EncodeInto(obs, std::nullopt, feat);
  const CardCounts unseen = hanabi::UnseenCounts(obs);
  std::vector<float> off(vocab_size());
  while (static_cast<int>(r.hands.size()) < n && r.attempts < max_attempts) {
    const int batch = static_cast<int>(
        std::min<int64_t>(n - static_cast<int>(r.hands.size()), max_attempts - r.attempts));
    r.attempts += batch;
    std::vector<Hand> hands(batch);
    std::vector<CardCounts> avail(batch, unseen);
    std::vector<std::vector<float>> prev(batch, std::vector<float>(types, 0.0f));
    std::vector<bool> alive(batch, true);
    policy::Matrix x(in, batch);
    for (int s = 0; s < h; ++s) {
      for (int b = 0; b < batch; ++b) {
        EncodeInput(feat, s, prev[b], std::span<float>(x.col(b).data(), in));
      }
      const policy::Matrix logits = net_.Forward(x);
      for (int b = 0; b < batch; ++b) {
        if (!alive[b]) continue;
        PriorOffsets(obs, avail[b], s, off);
        const auto p = SoftmaxWithOffsets(
            std::span<const float>(logits.col(b).data(), logits.rows()), off);
        const size_t t = rng.Categorical(std::span<const double>(p.data(), types));
        if (t == static_cast<size_t>(types)) {
          alive[b] = false;
          continue;
        }
        hands[b].push_back(Card::FromIndex(static_cast<int>(t), ranks));
        prev[b][t] += 1.0f;
        if (avail[b][t] > 0) --avail[b][t];
      }
    }
    for (int b = 0; b < batch; ++b) {
      if (alive[b] && IsConsistent(obs, hands[b])) r.hands.push_back(std::move(hands[b]));
    }
  }
  return r;
}

policy::Checkpoint LearnedBelief::ToCheckpoint() const {
  policy::Checkpoint c;
  c.kind = "belief";
  c.config = config_;
  c.encoder_schema_version = policy::kEncoderSchemaVersion;
  c.params = {{"count_prior", count_prior_}, {"net", net_.ToJson()}};
  return c;
}

std::shared_ptr<LearnedBelief> LearnedBelief::FromCheckpoint(const policy::Checkpoint& c) {
  if (c.kind != "belief") throw FormatError("checkpoint does not hold a belief model");
  try {
    return std::make_shared<LearnedBelief>(c.config, policy::Mlp::FromJson(c.params.at("net")),
                                           c.params.at("count_prior").get<bool>());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed belief checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("belief checkpoint: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Training.

nlohmann::json BeliefTrainConfig::ToJson() const {
  return {{"hidden", hidden},         {"lr", lr},
          {"batch_size", batch_size}, {"epochs", epochs},
          {"games_per_epoch", games_per_epoch}, {"heldout_games", heldout_games},
          {"count_prior", count_prior}, {"seed", seed}};
}

BeliefTrainConfig BeliefTrainConfig::FromJson(const nlohmann::json& j) {
  BeliefTrainConfig c;
  try {
    c.hidden = j.value("hidden", c.hidden);
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.epochs = j.value("epochs", c.epochs);
    c.games_per_epoch = j.value("games_per_epoch", c.games_per_epoch);
    c.heldout_games = j.value("heldout_games", c.heldout_games);
    c.count_prior = j.value("count_prior", c.count_prior);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad belief training config: ") + e.what());
  }
  if (c.epochs < 1 || c.games_per_epoch < 1 || c.heldout_games < 1 || c.batch_size < 1) {
    throw ConfigError("belief training config out of range");
  }
  return c;
}

nlohmann::json BeliefTrainReport::ToJson() const {
  return {{"heldout_nll_per_card", heldout_nll_per_card},
          {"count_prior_nll_per_card", count_prior_nll_per_card},
          {"best_epoch", best_epoch}};
}

namespace {

// One row per (decision, slot).
struct BeliefData {
  int dim = 0;
  int vocab = 0;
  std::vector<float> x;
  std::vector<float> offsets;
  std::vector<int> target;
  std::vector<bool> occupied;
  int64_t size() const { return static_cast<int64_t>(target.size()); }
};

void CollectGame(const LearnedBelief& model, const policy::FeatureEncoder& enc,
                 const policy::Policy& pi, const policy::Policy& rho, int pi_seat, uint64_t seed,
                 BeliefData* out) {
  const GameConfig& cfg = model.config();
  const int types = cfg.NumCardTypes();
  const int ranks = cfg.NumRanks();
  GameState s = hanabi::NewGame(cfg, seed);
  Rng rng(DeriveSeed(seed, 5));
  std::vector<float> feat(enc.size());
  std::vector<float> prev(types);
  while (!s.terminal()) {
    const int p = s.active_player();
    const Observation obs = hanabi::Observe(s, p);
    if (p == pi_seat) {
      enc.EncodeInto(obs, std::nullopt, feat);
      const Hand& hand = s.hand(p);
      std::fill(prev.begin(), prev.end(), 0.0f);
      CardCounts avail = hanabi::UnseenCounts(obs);
      for (int slot = 0; slot < cfg.hand_size; ++slot) {
        const size_t xo = out->x.size();
        out->x.resize(xo + out->dim);
        model.EncodeInput(feat, slot, prev, std::span<float>(out->x.data() + xo, out->dim));
        const size_t oo = out->offsets.size();
        out->offsets.resize(oo + out->vocab);
        model.PriorOffsets(obs, avail, slot, std::span<float>(out->offsets.data() + oo, out->vocab));
        const bool occ = slot < static_cast<int>(hand.size());
        const int t = occ ? hand[slot].Index(ranks) : types;
        out->target.push_back(t);
        out->occupied.push_back(occ);
        if (occ) {
          prev[t] += 1.0f;
          --avail[t];
        }
      }
    }
    const policy::Policy& actor = p == pi_seat ? pi : rho;
    const hanabi::Action a = policy::ChooseAction(actor, hanabi::AohView(&obs, 1), std::nullopt,
                                                  /*greedy=*/false, rng);
    s.Apply(a);
  }
}

BeliefData Collect(const LearnedBelief& model, const policy::FeatureEncoder& enc,
                   const policy::Policy& pi, const policy::Policy& rho, int games,
                   uint64_t seed) {
  BeliefData d;
  d.dim = model.input_size();
  d.vocab = model.vocab_size();
  for (int g = 0; g < games; ++g) {
    CollectGame(model, enc, pi, rho, g % 2, DeriveSeed(seed, g), &d);
  }
  return d;
}

// Mean -log p over occupied slots; optionally the prior-only baseline.
double HeldoutNll(const policy::Mlp& net, const BeliefData& d, bool prior_only) {
  double total = 0.0;
  int64_t n = 0;
  constexpr int kChunk = 2048;
  for (int64_t start = 0; start < d.size(); start += kChunk) {
    const int m = static_cast<int>(std::min<int64_t>(kChunk, d.size() - start));
    policy::Matrix logits;
    if (prior_only) {
      logits = policy::Matrix::Zero(d.vocab, m);
    } else {
      logits = net.Forward(Eigen::Map<const policy::Matrix>(d.x.data() + start * d.dim, d.dim, m));
    }
    for (int i = 0; i < m; ++i) {
      const int64_t k = start + i;
      if (!d.occupied[k]) continue;
      const auto p = SoftmaxWithOffsets(
          std::span<const float>(logits.col(i).data(), d.vocab),
          std::span<const float>(d.offsets.data() + k * d.vocab, d.vocab));
      total -= std::log(std::max(p[d.target[k]], 1e-300));
      ++n;
    }
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace

std::shared_ptr<LearnedBelief> TrainBelief(const policy::Policy& pi, const policy::Policy& rho,
                                           const GameConfig& config,
                                           const BeliefTrainConfig& hyper,
                                           BeliefTrainReport* report) {
  const policy::FeatureEncoder enc(config, {});
  std::vector<int> sizes = {enc.size() + config.hand_size + config.NumCardTypes()};
  sizes.insert(sizes.end(), hyper.hidden.begin(), hyper.hidden.end());
  sizes.push_back(config.NumCardTypes() + 1);
  policy::Mlp net(sizes, DeriveSeed(hyper.seed, 1));
  if (hyper.count_prior) {
    // Start exactly at the count prior.
    net.weights().back().setZero();
    net.biases().back().setZero();
  }
  LearnedBelief model(config, net, hyper.count_prior);
  const BeliefData heldout =
      Collect(model, enc, pi, rho, hyper.heldout_games, DeriveSeed(hyper.seed, 2));

  BeliefTrainReport rep;
  rep.count_prior_nll_per_card = HeldoutNll(net, heldout, /*prior_only=*/true);
  policy::Adam opt(net, policy::AdamConfig{.lr = hyper.lr});
  Rng rng(DeriveSeed(hyper.seed, 3));
  policy::Mlp best = net;
  double best_nll = std::numeric_limits<double>::infinity();
  auto grads = net.ZeroGradients();
  for (int epoch = 1; epoch <= hyper.epochs; ++epoch) {
    const BeliefData d = Collect(model, enc, pi, rho, hyper.games_per_epoch,
                                 DeriveSeed(hyper.seed, 1000 + epoch));
    std::vector<int64_t> order(d.size());
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(std::span<int64_t>(order));
    for (int64_t start = 0; start < d.size(); start += hyper.batch_size) {
      const int m = static_cast<int>(std::min<int64_t>(hyper.batch_size, d.size() - start));
      policy::Matrix x(d.dim, m);
      for (int i = 0; i < m; ++i) {
        x.col(i) = Eigen::Map<const policy::Vector>(d.x.data() + order[start + i] * d.dim, d.dim);
      }
      policy::Mlp::Tape tape;
      const policy::Matrix logits = net.Forward(x, &tape);
      policy::Matrix g = policy::Matrix::Zero(d.vocab, m);
      for (int i = 0; i < m; ++i) {
        const int64_t k = order[start + i];
        const auto p = SoftmaxWithOffsets(
            std::span<const float>(logits.col(i).data(), d.vocab),
            std::span<const float>(d.offsets.data() + k * d.vocab, d.vocab));
        for (int v = 0; v < d.vocab; ++v) g(v, i) = static_cast<float>(p[v] / m);
        g(d.target[k], i) -= 1.0f / m;
      }
      grads.SetZero();
      net.Backward(tape, g, &grads);
      opt.Step(&net, grads);
    }
    const double nll = HeldoutNll(net, heldout, false);
    rep.heldout_nll_per_card.push_back(nll);
    if (nll < best_nll) {
      best_nll = nll;
      best = net;
      rep.best_epoch = epoch;
    }
  }
  if (report) *report = rep;
  return std::make_shared<LearnedBelief>(config, std::move(best), hyper.count_prior);
}

}  // namespace pikl::belief
