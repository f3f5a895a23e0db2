#include "pikl/il/il.h"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <thread>

#include "pikl/errors.h"
#include "pikl/harness/dataset.h"
#include "pikl/hanabi/state.h"
#include "pikl/search/search.h"

namespace pikl::il {

using hanabi::Action;
using hanabi::GameState;
using hanabi::Observation;

LambdaDistribution LambdaDistribution::Default() {
  LambdaDistribution d;
  for (double mu : {1.0, 2.0, 5.0, 10.0}) d.components.push_back({mu, mu / 4});
  return d;
}

void LambdaDistribution::Validate() const {
  if (components.empty()) throw ConfigError("lambda distribution has no components");
  for (const auto& c : components) {
    if (!(c.mu > 0.0)) throw ConfigError("lambda component mu must be positive");
    if (!(c.sigma >= 0.0)) throw ConfigError("lambda component sigma must be non-negative");
  }
  if (!weights.empty()) {
    if (weights.size() != components.size()) {
      throw ConfigError("lambda weights and components differ in length");
    }
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0)) throw ConfigError("negative lambda component weight");
      total += w;
    }
    if (!(total > 0.0)) throw ConfigError("lambda component weights sum to zero");
  }
}

std::vector<double> LambdaDistribution::Mus() const {
  std::vector<double> m;
  for (const auto& c : components) m.push_back(c.mu);
  return m;
}

nlohmann::json LambdaDistribution::ToJson() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : components) comps.push_back({{"mu", c.mu}, {"sigma", c.sigma}});
  nlohmann::json j = {{"components", comps}};
  if (!weights.empty()) j["weights"] = weights;
  return j;
}

LambdaDistribution LambdaDistribution::FromJson(const nlohmann::json& j) {
  LambdaDistribution d;
  try {
    for (const auto& c : j.at("components")) {
      d.components.push_back({c.at("mu").get<double>(), c.at("sigma").get<double>()});
    }
    if (j.contains("weights")) d.weights = j.at("weights").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad lambda distribution: ") + e.what());
  }
  d.Validate();
  return d;
}

LambdaSample SampleLambda(const LambdaDistribution& dist, Rng& rng) {
  size_t k;
  if (dist.weights.empty()) {
    k = rng.UniformInt(static_cast<uint64_t>(dist.components.size()));
  } else {
    k = rng.Categorical(dist.weights);
  }
  const LambdaComponent& c = dist.components[k];
  if (c.sigma == 0.0) return {c.mu, c.mu};
  for (;;) {
    const double x = rng.Normal(c.mu, c.sigma);
    if (x > 0.0 && x < 2 * c.mu) return {x, c.mu};
  }
}

std::string CollectModeName(CollectMode m) {
  return m == CollectMode::kBothSeats ? "both_seats" : "single_seat_sound";
}

CollectMode CollectModeFromName(const std::string& s) {
  if (s == "both_seats") return CollectMode::kBothSeats;
  if (s == "single_seat_sound") return CollectMode::kSingleSeatSound;
  throw ConfigError("unknown collection mode: " + s);
}

void ILConfig::Validate() const {
  if (k < 0) throw ConfigError("k must be non-negative");
  if (d < 1) throw ConfigError("d must be at least 1");
  if (rollouts_M < 1) throw ConfigError("rollouts_M must be positive");
  if (workers < 1) throw ConfigError("workers must be positive");
  if (belief_decision_points_factor < 0) throw ConfigError("negative belief factor");
}

nlohmann::json ILConfig::ToJson() const {
  return {{"k", k},
          {"d", d},
          {"rollouts_M", rollouts_M},
          {"mode", CollectModeName(mode)},
          {"belief_decision_points_factor", belief_decision_points_factor},
          {"belief", belief.ToJson()},
          {"bc", bc.ToJson()},
          {"color_shuffle", color_shuffle},
          {"workers", workers},
          {"seed", seed}};
}

ILConfig ILConfig::FromJson(const nlohmann::json& j) {
  ILConfig c;
  try {
    c.k = j.value("k", c.k);
    c.d = j.value("d", c.d);
    c.rollouts_M = j.value("rollouts_M", c.rollouts_M);
    if (j.contains("mode")) c.mode = CollectModeFromName(j.at("mode").get<std::string>());
    c.belief_decision_points_factor =
        j.value("belief_decision_points_factor", c.belief_decision_points_factor);
    if (j.contains("belief")) c.belief = belief::BeliefTrainConfig::FromJson(j.at("belief"));
    if (j.contains("bc")) c.bc = policy::TrainConfig::FromJson(j.at("bc"));
    c.color_shuffle = j.value("color_shuffle", c.color_shuffle);
    c.workers = j.value("workers", c.workers);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad IL config: ") + e.what());
  }
  c.Validate();
  return c;
}

std::array<std::optional<LambdaSample>, 2> DrawSeatLambdas(const LambdaDistribution& dist,
                                                           CollectMode mode, Rng& rng) {
  std::array<std::optional<LambdaSample>, 2> out;
  if (mode == CollectMode::kBothSeats) {
    out[0] = SampleLambda(dist, rng);
    out[1] = SampleLambda(dist, rng);
  } else {
    const int seat = static_cast<int>(rng.UniformInt(uint64_t{2}));
    out[seat] = SampleLambda(dist, rng);
  }
  return out;
}

hanabi::GameRecord GenerateGame(const hanabi::GameConfig& config, policy::PolicyPtr pi_roll,
                                policy::PolicyPtr pi_anc, const belief::BeliefModel& belief,
                                const std::array<std::optional<LambdaSample>, 2>& lambdas,
                                int rollouts_M, uint64_t seed, GenStats* stats) {
  GameState s = hanabi::NewGame(config, seed);
  hanabi::GameRecord rec = hanabi::BeginRecord(s, seed);
  Rng rng(DeriveSeed(seed, 1));
  std::array<std::vector<Observation>, 2> aoh;
  for (int p = 0; p < 2; ++p) aoh[p].push_back(hanabi::Observe(s, p));

  std::array<search::SearchParams, 2> params;
  int searchers = 0;
  for (int p = 0; p < 2; ++p) {
    if (!lambdas[p]) continue;
    ++searchers;
    auto& sp = params[p];
    sp.lambda = lambdas[p]->value;
    sp.rollouts_M = rollouts_M;
    sp.mode = search::ActMode::kGreedy;
    sp.partner_model = pi_roll;
    sp.rollout_policy = pi_roll;
    sp.anchor_policy = pi_anc;
    // A λ-conditioned rollout policy gets the searcher's own label for both
    // seats: the partner's label is not observable.
    if (pi_roll->LambdaConditioned()) {
      sp.rollout_lambda = sp.partner_lambda = lambdas[p]->mu;
    }
    if (pi_anc->LambdaConditioned()) sp.anchor_lambda = lambdas[p]->mu;
  }
  std::optional<double> plain_label;
  for (const auto& l : lambdas) {
    if (l && pi_roll->LambdaConditioned()) plain_label = l->mu;
  }
  if (searchers == 1) {
    for (int p = 0; p < 2; ++p) {
      if (lambdas[p]) rec.train_players = {p};
    }
  }

  while (!s.terminal()) {
    const int p = s.active_player();
    int a;
    std::optional<double> label;
    if (lambdas[p]) {
      const search::Decision d = search::PiklDecide(aoh[p], belief, params[p], rng);
      a = d.action;
      label = lambdas[p]->mu;
      if (stats != nullptr) {
        ++stats->decisions;
        stats->hands_requested += d.q.requested;
        stats->hands_shortfall += d.q.shortfall;
      }
    } else {
      const auto probs = pi_roll->Probs(aoh[p], plain_label);
      a = policy::MaskedArgmax(probs, aoh[p].back().legal_mask);
    }
    const Action act = Action::FromIndex(config, a);
    hanabi::RecordStep(rec, p, act, s.Apply(act), label);
    for (int q = 0; q < 2; ++q) aoh[q].push_back(hanabi::Observe(s, q));
  }
  return rec;
}

nlohmann::json ILIteration::ToJson() const {
  return {{"belief", belief.ToJson()},
          {"conditioned", conditioned.ToJson()},
          {"unconditioned", unconditioned.ToJson()},
          {"generated_mean_score", generated_mean_score},
          {"acceptance_rate", acceptance_rate},
          {"seconds", seconds}};
}

namespace {

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Decisions per game of one seat under self-play of `p`, from a few games.
double SeatDecisionsPerGame(const hanabi::GameConfig& cfg, const policy::Policy& p,
                            uint64_t seed) {
  const int games = 20;
  int64_t moves = 0;
  Rng rng(seed);
  for (int g = 0; g < games; ++g) {
    GameState s = hanabi::NewGame(cfg, DeriveSeed(seed, g));
    while (!s.terminal()) {
      const Observation o = hanabi::Observe(s, s.active_player());
      s.Apply(policy::ChooseAction(p, hanabi::AohView(&o, 1), std::nullopt, false, rng));
      ++moves;
    }
  }
  return static_cast<double>(moves) / (2.0 * games);
}

}  // namespace

ILResult RunPiklIl(policy::PolicyPtr pi_bc, const LambdaDistribution& dist,
                   const ILConfig& il, const ILHooks& hooks) {
  if (!pi_bc) throw UsageError("piKL-IL needs an anchor policy");
  dist.Validate();
  il.Validate();
  ILResult result;
  result.il = pi_bc;
  result.il_prime = pi_bc;
  if (il.k == 0) return result;

  const hanabi::GameConfig cfg = pi_bc->config();
  const policy::PolicyPtr anchor = pi_bc;  // never reassigned
  if (!hooks.out_dir.empty()) std::filesystem::create_directories(hooks.out_dir);
  auto path = [&](const std::string& name, int it) {
    return (std::filesystem::path(hooks.out_dir) / (name + "_" + std::to_string(it))).string();
  };
  std::mutex out_mu;
  auto emit = [&](const nlohmann::json& j) {
    if (hooks.progress == nullptr) return;
    std::lock_guard<std::mutex> lock(out_mu);
    *hooks.progress << j.dump() << std::endl;
  };

  policy::PolicyPtr current = pi_bc;
  for (int it = 0; it < il.k; ++it) {
    const auto t0 = std::chrono::steady_clock::now();
    ILIteration rep;

    // 1. Belief on the current policy's self-play.
    belief::BeliefTrainConfig bh = il.belief;
    bh.seed = DeriveSeed(il.seed, 100 + it);
    if (il.belief_decision_points_factor > 0) {
      const double per_game = SeatDecisionsPerGame(cfg, *current, DeriveSeed(il.seed, 200 + it));
      bh.games_per_epoch = std::max(
          1, static_cast<int>(std::ceil(il.belief_decision_points_factor * il.d / per_game)));
    }
    emit({{"event", "belief_start"}, {"iteration", it}, {"games_per_epoch", bh.games_per_epoch}});
    auto belief = belief::TrainBelief(*current, *current, cfg, bh, &rep.belief);
    if (!hooks.out_dir.empty()) {
      policy::SaveCheckpoint(belief->ToCheckpoint(), path("belief", it) + ".json");
    }
    emit({{"event", "belief_done"}, {"iteration", it}, {"report", rep.belief.ToJson()}});

    // 2. d games of piKL-LBS with per-seat λ.
    std::vector<hanabi::GameRecord> games(il.d);
    std::vector<GenStats> stats(il.workers);
    std::atomic<int> next{0};
    std::atomic<int> done{0};
    std::mutex score_mu;
    double score_sum = 0.0;
    const auto g0 = std::chrono::steady_clock::now();
    auto work = [&](int w) {
      for (;;) {
        const int g = next.fetch_add(1);
        if (g >= il.d) return;
        const uint64_t gseed = DeriveSeed(DeriveSeed(il.seed, 300 + it), g);
        Rng lam_rng(DeriveSeed(gseed, 9));
        const auto lambdas = DrawSeatLambdas(dist, il.mode, lam_rng);
        if (anchor.get() != pi_bc.get()) throw std::logic_error("anchor changed");
        games[g] = GenerateGame(cfg, current, anchor, *belief, lambdas, il.rollouts_M, gseed,
                                &stats[w]);
        int n;
        double mean;
        {
          std::lock_guard<std::mutex> lock(score_mu);
          score_sum += games[g].final_score;
          n = ++done;
          mean = score_sum / n;
        }
        if (hooks.progress_every > 0 && n % hooks.progress_every == 0) {
          emit({{"event", "generate"},
                {"iteration", it},
                {"games", n},
                {"games_per_sec", n / std::max(1e-9, Seconds(g0))},
                {"mean_score", mean},
                {"acceptance_rate", stats[w].acceptance_rate()}});
        }
      }
    };
    if (il.workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errs(il.workers);
      for (int w = 0; w < il.workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            work(w);
          } catch (...) {
            errs[w] = std::current_exception();
            next = il.d;
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errs) {
        if (e) std::rethrow_exception(e);
      }
    }
    GenStats tot;
    for (const auto& s : stats) {
      tot.decisions += s.decisions;
      tot.hands_requested += s.hands_requested;
      tot.hands_shortfall += s.hands_shortfall;
    }
    rep.generated_mean_score = score_sum / il.d;
    rep.acceptance_rate = tot.acceptance_rate();
    if (!hooks.out_dir.empty()) harness::WriteDataset(path("dataset", it) + ".jsonl", games);
    emit({{"event", "generate_done"},
          {"iteration", it},
          {"games", il.d},
          {"mean_score", rep.generated_mean_score},
          {"acceptance_rate", rep.acceptance_rate},
          {"seconds", Seconds(g0)}});

    // 3. Re-imitate, with and without the λ input.
    policy::TrainConfig bc = il.bc;
    bc.seed = DeriveSeed(il.seed, 400 + it);
    policy::BcOptions cond{il.color_shuffle, true, dist.Mus(), "pikl-il"};
    auto il_policy = policy::BcTrain(games, cond, bc, &rep.conditioned);
    policy::BcOptions plain{il.color_shuffle, false, {}, "pikl-il-prime"};
    auto il_prime = policy::BcTrain(games, plain, bc, &rep.unconditioned);
    if (!hooks.out_dir.empty()) {
      policy::SaveCheckpoint(il_policy->ToCheckpoint(), path("il", it) + ".json");
      policy::SaveCheckpoint(il_prime->ToCheckpoint(), path("il_prime", it) + ".json");
    }
    rep.seconds = Seconds(t0);
    emit({{"event", "iteration_done"}, {"iteration", it}, {"report", rep.ToJson()}});

    current = il_policy;
    result.il = il_policy;
    result.il_prime = il_prime;
    result.belief = belief;
    result.dataset = std::move(games);
    result.iterations.push_back(std::move(rep));
  }
  return result;
}

}  // namespace pikl::il
