#include "pikl/harness/eval.h"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "pikl/errors.h"

namespace pikl::harness {

using hanabi::GameState;
using hanabi::Observation;

EvalReport EvalReport::FromScores(std::vector<int> scores, std::vector<uint64_t> seeds,
                                  int max_score) {
  EvalReport r;
  r.n_games = static_cast<int64_t>(scores.size());
  r.histogram.assign(max_score + 1, 0);
  double sum = 0.0;
  int64_t perfect = 0;
  for (int s : scores) {
    sum += s;
    ++r.histogram[s];
    perfect += s == max_score;
  }
  const double n = static_cast<double>(r.n_games);
  if (r.n_games > 0) {
    r.mean = sum / n;
    r.perfect_fraction = perfect / n;
  }
  if (r.n_games > 1) {
    double ss = 0.0;
    for (int s : scores) ss += (s - r.mean) * (s - r.mean);
    r.stderr_of_mean = std::sqrt(ss / (n - 1)) / std::sqrt(n);
  }
  r.scores = std::move(scores);
  r.seeds = std::move(seeds);
  return r;
}

nlohmann::json EvalReport::ToJson() const {
  return {{"n_games", n_games},        {"mean", mean},
          {"stderr", stderr_of_mean},  {"perfect_fraction", perfect_fraction},
          {"histogram", histogram},    {"seeds", seeds},
          {"scores", scores}};
}

hanabi::GameRecord PlayGame(const policy::Policy& p0, const policy::Policy& p1,
                            std::optional<double> lambda0, std::optional<double> lambda1,
                            uint64_t seed, bool greedy, const std::vector<hanabi::Card>* deck) {
  const hanabi::GameConfig& cfg = p0.config();
  GameState s = deck ? GameState::FromDeckOrder(hanabi::MakeConfig(cfg), *deck)
                     : hanabi::NewGame(cfg, seed);
  hanabi::GameRecord rec = hanabi::BeginRecord(s, seed);
  Rng rng(DeriveSeed(seed, 0xE7A1));
  std::array<std::vector<Observation>, 2> aoh;
  for (int p = 0; p < 2; ++p) aoh[p].push_back(hanabi::Observe(s, p));
  const policy::Policy* seats[2] = {&p0, &p1};
  const std::optional<double> lambdas[2] = {lambda0, lambda1};
  while (!s.terminal()) {
    const int p = s.active_player();
    const policy::Policy& pol = *seats[p];
    // Markov policies only need the current observation.
    const hanabi::AohView view =
        pol.Markov() ? hanabi::AohView(&aoh[p].back(), 1) : hanabi::AohView(aoh[p]);
    const hanabi::Action a = policy::ChooseAction(pol, view, lambdas[p], greedy, rng);
    hanabi::RecordStep(rec, p, a, s.Apply(a));
    for (int q = 0; q < 2; ++q) aoh[q].push_back(hanabi::Observe(s, q));
  }
  return rec;
}

EvalReport Evaluate(const policy::Policy& a, const policy::Policy& b, int64_t n,
                    uint64_t seed_base, const EvalOptions& options) {
  if (n <= 0) throw UsageError("evaluation needs at least one game");
  if (a.config().Hash() != b.config().Hash()) {
    throw ConfigError("policies were built for different game configs: " + a.Name() + " vs " +
                      b.Name());
  }
  std::vector<int> scores(n);
  std::vector<uint64_t> seeds(n);
  std::vector<std::optional<hanabi::GameRecord>> pending(n);
  std::mutex mu;
  int64_t next_emit = 0;
  std::atomic<int64_t> next{0};
  std::exception_ptr error;

  auto worker = [&]() {
    try {
      for (int64_t g; (g = next.fetch_add(1)) < n;) {
        const uint64_t seed = seed_base + static_cast<uint64_t>(g);
        std::vector<hanabi::Card> deck;
        if (options.deck) deck = options.deck(seed);
        const bool a_first = g % 2 == 0;
        hanabi::GameRecord rec =
            a_first ? PlayGame(a, b, options.lambda_a, options.lambda_b, seed, options.greedy,
                               options.deck ? &deck : nullptr)
                    : PlayGame(b, a, options.lambda_b, options.lambda_a, seed, options.greedy,
                               options.deck ? &deck : nullptr);
        std::lock_guard<std::mutex> lock(mu);
        scores[g] = rec.final_score;
        seeds[g] = seed;
        if (options.on_record) {
          pending[g] = std::move(rec);
          while (next_emit < n && pending[next_emit]) {
            options.on_record(*pending[next_emit]);
            pending[next_emit].reset();
            ++next_emit;
          }
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!error) error = std::current_exception();
      next = n;
    }
  };
  const int workers = std::max(1, std::min<int>(options.workers, static_cast<int>(n)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  return EvalReport::FromScores(std::move(scores), std::move(seeds), a.config().MaxScore());
}

}  // namespace pikl::harness
