#include "pikl/br/br.h"

#include <chrono>
#include <cmath>
#include <limits>
#include <map>

#include "pikl/errors.h"
#include "pikl/hanabi/state.h"
#include "pikl/policy/network.h"

namespace pikl::br {

using hanabi::Action;
using hanabi::GameState;
using hanabi::Observation;
using policy::Matrix;
using policy::Mlp;

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

void BRConfig::Validate() const {
  if (!(lambda_reg >= 0.0)) throw ConfigError("lambda_reg must be >= 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must be in (0, 1]");
  if (!(epsilon_min >= 0.0 && epsilon_max <= 1.0 && epsilon_min <= epsilon_max)) {
    throw ConfigError("epsilon range must lie in [0, 1]");
  }
  if (train_steps < 0 || learner_steps_per_episode < 1 || warmup_episodes < 1) {
    throw ConfigError("bad BR schedule");
  }
  if (replay_capacity < 1 || batch_size < 1 || target_sync_every < 1 || window_steps < 1) {
    throw ConfigError("bad BR sizes");
  }
  if (!(priority_exponent >= 0.0)) throw ConfigError("priority exponent must be >= 0");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(policy_temperature > 0.0)) throw ConfigError("policy_temperature must be positive");
}

nlohmann::json BRConfig::ToJson() const {
  return {{"lambda_reg", lambda_reg},
          {"gamma", gamma},
          {"epsilon_min", epsilon_min},
          {"epsilon_max", epsilon_max},
          {"partner_lambda_vocabulary", partner_lambda_vocabulary},
          {"partner_greedy", partner_greedy},
          {"policy_temperature", policy_temperature},
          {"train_steps", train_steps},
          {"learner_steps_per_episode", learner_steps_per_episode},
          {"warmup_episodes", warmup_episodes},
          {"replay_capacity", replay_capacity},
          {"priority_exponent", priority_exponent},
          {"batch_size", batch_size},
          {"hidden", hidden},
          {"lr", lr},
          {"clip_norm", clip_norm},
          {"target_sync_every", target_sync_every},
          {"window_steps", window_steps},
          {"td_error_cap", td_error_cap},
          {"eval_games", eval_games},
          {"seed", seed}};
}

BRConfig BRConfig::FromJson(const nlohmann::json& j) {
  BRConfig c;
  try {
    c.lambda_reg = j.value("lambda_reg", c.lambda_reg);
    c.gamma = j.value("gamma", c.gamma);
    c.epsilon_min = j.value("epsilon_min", c.epsilon_min);
    c.epsilon_max = j.value("epsilon_max", c.epsilon_max);
    c.partner_lambda_vocabulary =
        j.value("partner_lambda_vocabulary", c.partner_lambda_vocabulary);
    c.partner_greedy = j.value("partner_greedy", c.partner_greedy);
    c.policy_temperature = j.value("policy_temperature", c.policy_temperature);
    c.train_steps = j.value("train_steps", c.train_steps);
    c.learner_steps_per_episode = j.value("learner_steps_per_episode", c.learner_steps_per_episode);
    c.warmup_episodes = j.value("warmup_episodes", c.warmup_episodes);
    c.replay_capacity = j.value("replay_capacity", c.replay_capacity);
    c.priority_exponent = j.value("priority_exponent", c.priority_exponent);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.hidden = j.value("hidden", c.hidden);
    c.lr = j.value("lr", c.lr);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    c.target_sync_every = j.value("target_sync_every", c.target_sync_every);
    c.window_steps = j.value("window_steps", c.window_steps);
    c.td_error_cap = j.value("td_error_cap", c.td_error_cap);
    c.eval_games = j.value("eval_games", c.eval_games);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad BR config: ") + e.what());
  }
  c.Validate();
  return c;
}

int RegularizedArgmax(std::span<const double> q, std::span<const double> bc, double lambda,
                      uint64_t legal_mask) {
  bool any_mass = false;
  for (size_t a = 0; a < bc.size(); ++a) {
    if (((legal_mask >> a) & 1u) && bc[a] > 0.0) any_mass = true;
  }
  if (!any_mass) throw UsageError("anchor puts no mass on any legal action");
  int best = -1;
  double best_score = kNegInf;
  for (size_t a = 0; a < q.size(); ++a) {
    if (!((legal_mask >> a) & 1u)) continue;
    const double s = q[a] + lambda * std::log(std::max(bc[a], kAnchorFloor));
    if (best < 0 || s > best_score) {
      best = static_cast<int>(a);
      best_score = s;
    }
  }
  return best;
}

double RegularizedTarget(std::span<const double> q_next, std::span<const double> bc_next,
                         uint64_t legal_mask, double reward, bool terminal,
                         const BRConfig& config) {
  if (terminal) return reward;
  const int a = RegularizedArgmax(q_next, bc_next, config.lambda_reg, legal_mask);
  return reward + config.gamma * q_next[a];
}

int ExploreAction(std::span<const double> q, std::span<const double> bc, uint64_t legal_mask,
                  double epsilon, const BRConfig& config, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw UsageError("epsilon must be in [0, 1]");
  if (epsilon > 0.0 && rng.Bernoulli(epsilon)) {
    return policy::SampleIndex(policy::UniformOverMask(static_cast<int>(q.size()), legal_mask),
                               rng);
  }
  return RegularizedArgmax(q, bc, config.lambda_reg, legal_mask);
}

// ---------------------------------------------------------------------------

double ReplayEntry::Return() const {
  double r = pre_reward;
  for (const auto& s : steps) r += s.reward;
  return r;
}

void ReplayBuffer::Add(ReplayEntry entry) {
  if (entry.steps.empty()) return;
  entry.priority = max_priority_;
  transitions_ += static_cast<int64_t>(entry.steps.size());
  entries_.push_back(std::move(entry));
  while (static_cast<int>(entries_.size()) > capacity_) {
    transitions_ -= static_cast<int64_t>(entries_.front().steps.size());
    entries_.pop_front();
  }
}

std::vector<ReplayBuffer::Index> ReplayBuffer::Sample(int n, Rng& rng) const {
  if (entries_.empty()) throw UsageError("sampling from an empty replay buffer");
  std::vector<double> cum(entries_.size());
  double total = 0.0;
  for (size_t i = 0; i < entries_.size(); ++i) {
    const double w = alpha_ == 0.0 ? 1.0 : std::pow(entries_[i].priority, alpha_);
    total += w * static_cast<double>(entries_[i].steps.size());
    cum[i] = total;
  }
  std::vector<Index> out(n);
  for (int k = 0; k < n; ++k) {
    const double u = rng.Uniform() * total;
    size_t i = static_cast<size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (i >= entries_.size()) i = entries_.size() - 1;
    const int len = static_cast<int>(entries_[i].steps.size());
    out[k] = {static_cast<int64_t>(i), static_cast<int>(rng.UniformInt(static_cast<uint64_t>(len)))};
  }
  return out;
}

void ReplayBuffer::UpdatePriority(int64_t entry, double priority) {
  entries_[entry].priority = priority;
  max_priority_ = std::max(max_priority_, priority);
}

// ---------------------------------------------------------------------------

TdLearner::TdLearner(Mlp net, const BRConfig& config)
    : config_(config), online_(std::move(net)), target_(online_) {
  policy::AdamConfig ac;
  ac.lr = config.lr;
  ac.clip_norm = config.clip_norm;
  adam_ = policy::Adam(online_, ac);
}

std::vector<double> TdLearner::Step(std::span<const Transition> batch) {
  const int n = static_cast<int>(batch.size());
  const int in = online_.input_size();
  const int na = online_.output_size();
  Matrix x(in, n), xn(in, n);
  xn.setZero();
  for (int b = 0; b < n; ++b) {
    std::copy(batch[b].x.begin(), batch[b].x.end(), x.col(b).data());
    if (!batch[b].terminal) std::copy(batch[b].x_next.begin(), batch[b].x_next.end(), xn.col(b).data());
  }
  const Matrix qn = target_.Forward(xn);
  std::vector<double> target(n);
  std::vector<double> qcol(na), bccol(na);
  for (int b = 0; b < n; ++b) {
    const Transition& t = batch[b];
    if (t.terminal) {
      target[b] = t.reward;
      continue;
    }
    for (int a = 0; a < na; ++a) {
      qcol[a] = qn(a, b);
      bccol[a] = t.bc_next.empty() ? 1.0 : t.bc_next[a];
    }
    if (selector_) {
      target[b] = t.reward + config_.gamma * qcol[selector_(qcol, bccol, t.mask_next)];
    } else {
      target[b] = RegularizedTarget(qcol, bccol, t.mask_next, t.reward, false, config_);
    }
  }
  Mlp::Tape tape;
  const Matrix q = online_.Forward(x, &tape);
  Matrix d_out = Matrix::Zero(na, n);
  std::vector<double> td(n);
  for (int b = 0; b < n; ++b) {
    const double err = static_cast<double>(q(batch[b].action, b)) - target[b];
    td[b] = std::abs(err);
    d_out(batch[b].action, b) = static_cast<float>(err / n);
  }
  Mlp::Gradients g = online_.ZeroGradients();
  online_.Backward(tape, d_out, &g);
  adam_.Step(&online_, g);
  ++steps_;
  return td;
}

// ---------------------------------------------------------------------------

QPolicy::QPolicy(const hanabi::GameConfig& config, Mlp net, policy::PolicyPtr anchor,
                 double lambda_reg, double temperature, std::string name)
    : config_(config),
      encoder_(config, {}),
      net_(std::move(net)),
      anchor_(std::move(anchor)),
      lambda_reg_(lambda_reg),
      temperature_(temperature),
      name_(std::move(name)) {
  if (net_.input_size() != encoder_.size() || net_.output_size() != config_.NumActions()) {
    throw UsageError("Q network shape does not match the encoder and action space");
  }
  if (lambda_reg_ > 0.0 && !anchor_) throw UsageError("regularized Q policy needs its anchor");
  if (!(temperature_ > 0.0)) throw UsageError("temperature must be positive");
}

std::vector<double> QPolicy::Q(const Observation& obs) const {
  thread_local std::vector<float> x;
  x.resize(encoder_.size());
  encoder_.EncodeInto(obs, std::nullopt, x);
  const policy::Vector out = net_.Forward(x);
  std::vector<double> q(config_.NumActions(), kNegInf);
  for (int a = 0; a < config_.NumActions(); ++a) {
    if ((obs.legal_mask >> a) & 1u) q[a] = out[a];
  }
  return q;
}

policy::ActionProbs QPolicy::FromScores(const std::vector<double>& q, std::span<const double> bc,
                                        uint64_t mask) const {
  const int na = config_.NumActions();
  std::vector<double> s(na, kNegInf);
  double hi = kNegInf;
  for (int a = 0; a < na; ++a) {
    if (!((mask >> a) & 1u)) continue;
    s[a] = q[a];
    if (lambda_reg_ > 0.0) s[a] += lambda_reg_ * std::log(std::max(bc[a], kAnchorFloor));
    s[a] /= temperature_;
    hi = std::max(hi, s[a]);
  }
  policy::ActionProbs p(na, 0.0);
  double z = 0.0;
  for (int a = 0; a < na; ++a) {
    if (std::isfinite(s[a])) {
      p[a] = std::exp(s[a] - hi);
      z += p[a];
    }
  }
  for (double& v : p) v /= z;
  return p;
}

policy::ActionProbs QPolicy::Probs(policy::AohView aoh, std::optional<double>) const {
  const Observation& obs = aoh.back();
  const std::vector<double> q = Q(obs);
  if (lambda_reg_ > 0.0) {
    const policy::ActionProbs bc = anchor_->Probs(aoh, std::nullopt);
    return FromScores(q, bc, obs.legal_mask);
  }
  return FromScores(q, {}, obs.legal_mask);
}

std::optional<std::vector<double>> QPolicy::Values(policy::AohView aoh,
                                                   std::optional<double>) const {
  return Q(aoh.back());
}

void QPolicy::BatchProbs(std::span<const Observation* const> obs, std::optional<double>,
                         std::vector<policy::ActionProbs>* out) const {
  out->resize(obs.size());
  if (obs.empty()) return;
  const int n = static_cast<int>(obs.size());
  const int na = config_.NumActions();
  Matrix x(encoder_.size(), n);
  for (int i = 0; i < n; ++i) {
    encoder_.EncodeInto(*obs[i], std::nullopt, std::span<float>(x.col(i).data(), encoder_.size()));
  }
  const Matrix qm = net_.Forward(x);
  std::vector<policy::ActionProbs> bc;
  if (lambda_reg_ > 0.0) anchor_->BatchProbs(obs, std::nullopt, &bc);
  std::vector<double> q(na);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < na; ++a) q[a] = qm(a, i);
    (*out)[i] = FromScores(q, lambda_reg_ > 0.0 ? std::span<const double>(bc[i])
                                                : std::span<const double>(),
                           obs[i]->legal_mask);
  }
}

int QPolicy::Greedy(const Observation& obs) const {
  const std::vector<double> q = Q(obs);
  if (lambda_reg_ == 0.0) return policy::MaskedArgmax(q, obs.legal_mask);
  const policy::ActionProbs bc = anchor_->Probs(hanabi::AohView(&obs, 1), std::nullopt);
  return RegularizedArgmax(q, bc, lambda_reg_, obs.legal_mask);
}

policy::Checkpoint QPolicy::ToCheckpoint() const {
  policy::Checkpoint c;
  c.kind = "q";
  c.config = config_;
  c.encoder_schema_version = policy::kEncoderSchemaVersion;
  c.params = {{"net", net_.ToJson()},
              {"lambda_reg", lambda_reg_},
              {"temperature", temperature_},
              {"name", name_},
              {"anchor", nullptr}};
  if (lambda_reg_ > 0.0) {
    const auto* net = dynamic_cast<const policy::NetworkPolicy*>(anchor_.get());
    if (net == nullptr) throw UsageError("only a network anchor can be saved with a Q policy");
    c.params["anchor"] = net->ToCheckpoint().ToJson();
  }
  return c;
}

std::shared_ptr<QPolicy> QPolicy::FromCheckpoint(const policy::Checkpoint& c) {
  if (c.kind != "q") throw FormatError("checkpoint does not hold a Q network");
  try {
    policy::PolicyPtr anchor;
    if (!c.params.at("anchor").is_null()) {
      anchor = policy::NetworkPolicy::FromCheckpoint(
          policy::Checkpoint::FromJson(c.params.at("anchor")));
    }
    return std::make_shared<QPolicy>(c.config, Mlp::FromJson(c.params.at("net")), anchor,
                                     c.params.at("lambda_reg").get<double>(),
                                     c.params.value("temperature", 1.0),
                                     c.params.value("name", std::string("pikl-br")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed Q checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("Q checkpoint: ") + e.what());
  }
}

std::shared_ptr<QPolicy> LoadQPolicy(const std::string& path,
                                     const std::optional<hanabi::GameConfig>& expected) {
  return QPolicy::FromCheckpoint(policy::LoadCheckpoint(path, "q", expected));
}

// ---------------------------------------------------------------------------

nlohmann::json BRWindow::ToJson() const {
  nlohmann::json j = {{"event", "br_window"},
                      {"step", step},
                      {"mean_abs_td", mean_abs_td},
                      {"episodes", episodes}};
  if (std::isfinite(eval_mean_score)) {
    j["eval_mean_score"] = eval_mean_score;
    j["eval_lambda"] = eval_lambda;
  }
  return j;
}

nlohmann::json BRReport::ToJson() const {
  nlohmann::json w = nlohmann::json::array();
  for (const auto& x : windows) w.push_back(x.ToJson());
  return {{"windows", w}, {"episodes", episodes}, {"seconds", seconds}};
}

namespace {

std::optional<double> PartnerLambda(const policy::Policy& partner, const BRConfig& c, Rng& rng) {
  if (!partner.LambdaConditioned() || c.partner_lambda_vocabulary.empty()) return std::nullopt;
  return c.partner_lambda_vocabulary[rng.UniformInt(
      static_cast<uint64_t>(c.partner_lambda_vocabulary.size()))];
}

double EvalCrossPlay(const QPolicy& br, const policy::Policy& partner, std::optional<double> plam,
                     int games, uint64_t seed) {
  double sum = 0.0;
  Rng rng(seed);
  for (int g = 0; g < games; ++g) {
    GameState s = hanabi::NewGame(br.config(), DeriveSeed(seed, g));
    const int seat = g % 2;
    while (!s.terminal()) {
      const int p = s.active_player();
      const Observation obs = hanabi::Observe(s, p);
      Action a = p == seat ? Action::FromIndex(br.config(), br.Greedy(obs))
                           : policy::ChooseAction(partner, hanabi::AohView(&obs, 1), plam, true,
                                                  rng);
      s.Apply(a);
    }
    sum += s.status().final_score;
  }
  return sum / games;
}

}  // namespace

ReplayEntry CollectEpisode(const policy::Policy& partner, const policy::Policy& anchor,
                           const Mlp& net, const BRConfig& config, uint64_t seed, int seat,
                           Rng& rng, const TargetSelector& selector, int* final_score) {
  const hanabi::GameConfig& cfg = partner.config();
  const policy::FeatureEncoder encoder(cfg, {});
  const std::optional<double> plam = PartnerLambda(partner, config, rng);
  const double eps = rng.Uniform(config.epsilon_min, config.epsilon_max);
  GameState s = hanabi::NewGame(cfg, seed);
  ReplayEntry e;
  const int na = cfg.NumActions();
  std::vector<double> q(na);
  while (!s.terminal()) {
    const int p = s.active_player();
    const Observation obs = hanabi::Observe(s, p);
    int a;
    if (p == seat) {
      ReplayStep st;
      st.x.resize(encoder.size());
      encoder.EncodeInto(obs, std::nullopt, st.x);
      const policy::Vector out = net.Forward(st.x);
      for (int i = 0; i < na; ++i) q[i] = out[i];
      const policy::ActionProbs pb = anchor.Probs(hanabi::AohView(&obs, 1), std::nullopt);
      st.bc.assign(pb.begin(), pb.end());
      if (!selector) {
        a = ExploreAction(q, pb, obs.legal_mask, eps, config, rng);
      } else if (eps > 0.0 && rng.Bernoulli(eps)) {
        a = policy::SampleIndex(policy::UniformOverMask(na, obs.legal_mask), rng);
      } else {
        a = selector(q, pb, obs.legal_mask);
      }
      st.legal_mask = obs.legal_mask;
      st.action = a;
      e.steps.push_back(std::move(st));
    } else {
      a = policy::ChooseAction(partner, hanabi::AohView(&obs, 1), plam, config.partner_greedy, rng)
              .ToIndex(cfg);
    }
    const int r = s.Apply(Action::FromIndex(cfg, a)).reward;
    if (e.steps.empty()) {
      e.pre_reward += static_cast<float>(r);
    } else {
      e.steps.back().reward += static_cast<float>(r);
    }
  }
  if (final_score != nullptr) *final_score = s.status().final_score;
  return e;
}

std::shared_ptr<QPolicy> TrainBr(policy::PolicyPtr partner, policy::PolicyPtr anchor_bc,
                                 const BRConfig& config, BRReport* report,
                                 const BRHooks& hooks) {
  config.Validate();
  if (!partner || !anchor_bc) throw UsageError("BR training needs a partner and an anchor");
  if (!partner->Markov() || !anchor_bc->Markov()) {
    throw UsageError("BR partner and anchor must be Markov");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const hanabi::GameConfig cfg = partner->config();
  const policy::FeatureEncoder encoder(cfg, {});
  std::vector<int> sizes = {encoder.size()};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(cfg.NumActions());
  TdLearner learner(Mlp(sizes, DeriveSeed(config.seed, 1)), config);
  if (hooks.selector) learner.set_selector(hooks.selector);

  ReplayBuffer replay(config.replay_capacity, config.priority_exponent);
  Rng actor_rng(DeriveSeed(config.seed, 2));
  Rng sample_rng(DeriveSeed(config.seed, 3));
  Rng eval_rng(DeriveSeed(config.seed, 4));
  int64_t episodes = 0;
  auto add_episode = [&]() {
    replay.Add(CollectEpisode(*partner, *anchor_bc, learner.online(), config,
                              DeriveSeed(DeriveSeed(config.seed, 5), episodes),
                              static_cast<int>(episodes % 2), actor_rng, hooks.selector));
    ++episodes;
  };
  for (int i = 0; i < config.warmup_episodes; ++i) add_episode();

  BRReport rep;
  std::vector<Transition> batch(config.batch_size);
  double window_td = 0.0;
  int64_t window_n = 0;
  int over_cap = 0;
  for (int64_t step = 1; step <= config.train_steps; ++step) {
    if (step % config.learner_steps_per_episode == 0) add_episode();
    const auto idx = replay.Sample(config.batch_size, sample_rng);
    for (int b = 0; b < config.batch_size; ++b) {
      const ReplayEntry& e = replay.entry(idx[b].entry);
      const int k = idx[b].step;
      const ReplayStep& st = e.steps[k];
      Transition& t = batch[b];
      t.x = st.x;
      t.action = st.action;
      t.reward = st.reward;
      t.terminal = k + 1 == static_cast<int>(e.steps.size());
      t.x_next = {};
      t.mask_next = 0;
      t.bc_next = {};
      if (!t.terminal) {
        const ReplayStep& nx = e.steps[k + 1];
        t.x_next = nx.x;
        t.mask_next = nx.legal_mask;
        t.bc_next = nx.bc;
      }
    }
    const auto td = learner.Step(batch);
    std::map<int64_t, bool> seen;
    for (int b = 0; b < config.batch_size; ++b) {
      window_td += td[b];
      ++window_n;
      if (config.priority_exponent > 0.0) {
        // Max |TD| per episode over the entries touched in this batch.
        const double cur = replay.entry(idx[b].entry).priority;
        replay.UpdatePriority(idx[b].entry, seen[idx[b].entry] ? std::max(cur, td[b]) : td[b]);
        seen[idx[b].entry] = true;
      }
    }
    if (step % config.target_sync_every == 0) learner.SyncTarget();
    if (step % config.window_steps == 0 || step == config.train_steps) {
      BRWindow w;
      w.step = step;
      w.mean_abs_td = window_td / std::max<int64_t>(1, window_n);
      w.episodes = episodes;
      w.eval_mean_score = std::numeric_limits<double>::quiet_NaN();
      if (config.eval_games > 0) {
        QPolicy snapshot(cfg, learner.online(), anchor_bc, config.lambda_reg);
        const std::optional<double> plam = PartnerLambda(*partner, config, eval_rng);
        w.eval_lambda = plam.value_or(0.0);
        w.eval_mean_score = EvalCrossPlay(snapshot, *partner, plam, config.eval_games,
                                          DeriveSeed(config.seed, 6));
      }
      rep.windows.push_back(w);
      if (hooks.progress != nullptr) *hooks.progress << w.ToJson().dump() << std::endl;
      over_cap = w.mean_abs_td > config.td_error_cap ? over_cap + 1 : 0;
      if (over_cap >= 3) {
        throw TrainingError("TD error above " + std::to_string(config.td_error_cap) +
                            " for 3 windows (last " + std::to_string(w.mean_abs_td) + ")");
      }
      window_td = 0.0;
      window_n = 0;
    }
  }
  rep.episodes = episodes;
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (report != nullptr) *report = rep;
  return std::make_shared<QPolicy>(cfg, learner.online(), anchor_bc, config.lambda_reg,
                                   config.policy_temperature);
}

}  // namespace pikl::br
