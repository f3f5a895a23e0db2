#include "pikl/policy/bc.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pikl/errors.h"

namespace pikl::policy {

using hanabi::GameRecord;

nlohmann::json TrainConfig::ToJson() const {
  return {{"hidden", hidden},         {"lr", lr},
          {"batch_size", batch_size}, {"max_epochs", max_epochs},
          {"patience", patience},     {"validation_fraction", validation_fraction},
          {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  TrainConfig c;
  try {
    c.hidden = j.value("hidden", c.hidden);
    c.lr = j.value("lr", c.lr);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.max_epochs = j.value("max_epochs", c.max_epochs);
    c.patience = j.value("patience", c.patience);
    c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
    c.seed = j.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad training config: ") + e.what());
  }
  if (c.lr <= 0 || c.batch_size < 1 || c.max_epochs < 1 || c.patience < 1 ||
      c.validation_fraction < 0 || c.validation_fraction >= 1) {
    throw ConfigError("training config out of range");
  }
  return c;
}

nlohmann::json TrainReport::ToJson() const {
  nlohmann::json ep = nlohmann::json::array();
  for (const auto& e : epochs) {
    ep.push_back({{"epoch", e.epoch},
                  {"train_loss", e.train_loss},
                  {"val_loss", e.val_loss},
                  {"val_accuracy", e.val_accuracy}});
  }
  nlohmann::json by = nlohmann::json::object();
  for (const auto& [k, v] : val_accuracy_by_label) by[std::to_string(k)] = v;
  return {{"train_games", train_games},   {"val_games", val_games},
          {"train_samples", train_samples}, {"val_samples", val_samples},
          {"epochs", ep},                  {"best_epoch", best_epoch},
          {"best_val_accuracy", best_val_accuracy},
          {"val_accuracy_by_label", by}};
}

namespace {

struct SampleSet {
  int dim = 0;
  std::vector<float> x;  // dim floats per sample
  std::vector<uint64_t> mask;
  std::vector<int> action;
  std::vector<double> label;

  int64_t size() const { return static_cast<int64_t>(action.size()); }
  void Clear() {
    x.clear();
    mask.clear();
    action.clear();
    label.clear();
  }
};

void Extract(const GameRecord& record, const FeatureEncoder& enc, bool conditioned,
             SampleSet* out) {
  out->dim = enc.size();
  hanabi::ReplayWith(record, [&](const hanabi::GameState& s, const hanabi::RecordedMove& m) {
    if (!record.TrainsOn(m.player)) return;
    const Observation obs = hanabi::Observe(s, m.player);
    const size_t off = out->x.size();
    out->x.resize(off + enc.size());
    const std::optional<double> lam = conditioned ? m.lambda_label : std::nullopt;
    enc.EncodeInto(obs, lam, std::span<float>(out->x.data() + off, enc.size()));
    out->mask.push_back(obs.legal_mask);
    out->action.push_back(m.action);
    out->label.push_back(m.lambda_label.value_or(-1.0));
  });
}

// Softmax cross-entropy over the legal entries of each column. Writes the
// gradient w.r.t. logits (scaled by 1/n) into `grad` when non-null.
double MaskedCrossEntropy(const Matrix& logits, const std::vector<uint64_t>& mask,
                          const std::vector<int>& action, Matrix* grad, int* correct) {
  const int n = static_cast<int>(logits.cols());
  double loss = 0.0;
  if (grad) grad->setZero(logits.rows(), n);
  for (int i = 0; i < n; ++i) {
    const auto col = std::span<const float>(logits.col(i).data(), logits.rows());
    const std::vector<double> lp = MaskedLogSoftmax(col, mask[i]);
    loss -= lp[action[i]];
    if (correct) {
      int best = -1;
      for (int a = 0; a < logits.rows(); ++a) {
        if (((mask[i] >> a) & 1ULL) && (best < 0 || lp[a] > lp[best])) best = a;
      }
      if (best == action[i]) ++*correct;
    }
    if (grad) {
      for (int a = 0; a < logits.rows(); ++a) {
        if ((mask[i] >> a) & 1ULL) (*grad)(a, i) = static_cast<float>(std::exp(lp[a]) / n);
      }
      (*grad)(action[i], i) -= 1.0f / n;
    }
  }
  return loss / std::max(n, 1);
}

struct EvalResult {
  double loss = 0.0;
  double accuracy = 0.0;
  std::map<double, double> by_label;
};

EvalResult Evaluate(const Mlp& net, const SampleSet& data) {
  EvalResult r;
  if (data.size() == 0) return r;
  std::map<double, std::pair<int64_t, int64_t>> tally;
  constexpr int kChunk = 1024;
  double loss_sum = 0.0;
  int64_t correct_total = 0;
  for (int64_t start = 0; start < data.size(); start += kChunk) {
    const int n = static_cast<int>(std::min<int64_t>(kChunk, data.size() - start));
    const Matrix x = Eigen::Map<const Matrix>(data.x.data() + start * data.dim, data.dim, n);
    const Matrix logits = net.Forward(x);
    for (int i = 0; i < n; ++i) {
      const int64_t k = start + i;
      const auto col = std::span<const float>(logits.col(i).data(), logits.rows());
      const std::vector<double> lp = MaskedLogSoftmax(col, data.mask[k]);
      loss_sum -= lp[data.action[k]];
      const bool ok = MaskedArgmax(lp, data.mask[k]) == data.action[k];
      correct_total += ok;
      auto& t = tally[data.label[k]];
      t.first += ok;
      t.second += 1;
    }
  }
  r.loss = loss_sum / static_cast<double>(data.size());
  r.accuracy = static_cast<double>(correct_total) / static_cast<double>(data.size());
  for (const auto& [k, t] : tally) r.by_label[k] = static_cast<double>(t.first) / t.second;
  return r;
}

}  // namespace

void ExtractSamples(const GameRecord& record, const FeatureEncoder& encoder,
                    bool condition_on_lambda, std::vector<BcSample>* out) {
  SampleSet s;
  Extract(record, encoder, condition_on_lambda, &s);
  for (int64_t i = 0; i < s.size(); ++i) {
    BcSample b;
    b.x.assign(s.x.begin() + i * s.dim, s.x.begin() + (i + 1) * s.dim);
    b.legal_mask = s.mask[i];
    b.action = s.action[i];
    b.label = s.label[i];
    out->push_back(std::move(b));
  }
}

double PolicyAccuracy(const Policy& policy, const std::vector<GameRecord>& records,
                      bool condition_on_lambda) {
  int64_t n = 0, ok = 0;
  for (const GameRecord& r : records) {
    hanabi::ReplayWith(r, [&](const hanabi::GameState& s, const hanabi::RecordedMove& m) {
      if (!r.TrainsOn(m.player)) return;
      const Observation obs = hanabi::Observe(s, m.player);
      const ActionProbs p =
          policy.Probs(AohView(&obs, 1), condition_on_lambda ? m.lambda_label : std::nullopt);
      ok += MaskedArgmax(p, obs.legal_mask) == m.action;
      ++n;
    });
  }
  return n == 0 ? 0.0 : static_cast<double>(ok) / static_cast<double>(n);
}

std::shared_ptr<NetworkPolicy> BcTrain(const std::vector<GameRecord>& dataset,
                                       const BcOptions& options, const TrainConfig& hyper,
                                       TrainReport* report) {
  if (dataset.empty()) throw TrainingError("behavioral cloning needs a non-empty dataset");
  const hanabi::GameConfig& config = dataset.front().config;
  for (const auto& r : dataset) {
    if (!(r.config == config)) throw TrainingError("dataset mixes game configs");
  }
  if (options.condition_on_lambda && options.lambda_vocabulary.empty()) {
    throw UsageError("λ conditioning needs a λ vocabulary");
  }
  const int n_games = static_cast<int>(dataset.size());
  int n_val = 0;
  std::vector<const GameRecord*> train, val;
  if (hyper.validation_fraction > 0.0) {
    n_val = static_cast<int>(std::floor(hyper.validation_fraction * n_games + 1e-9));
    if (n_val < 1) {
      throw TrainingError("validation split of " + std::to_string(hyper.validation_fraction) +
                          " over " + std::to_string(n_games) + " games holds out no game");
    }
    if (n_val >= n_games) throw TrainingError("validation split leaves no training games");
  }
  for (int i = 0; i < n_games - n_val; ++i) train.push_back(&dataset[i]);
  for (int i = n_games - n_val; i < n_games; ++i) val.push_back(&dataset[i]);
  if (val.empty()) val = train;

  const std::vector<double> vocab = options.condition_on_lambda ? options.lambda_vocabulary
                                                                : std::vector<double>{};
  const FeatureEncoder enc(config, options.condition_on_lambda ? vocab : std::vector<double>{});
  const bool cond = options.condition_on_lambda;

  SampleSet val_set, train_set;
  for (const GameRecord* r : val) Extract(*r, enc, cond, &val_set);
  auto build_train = [&](Rng& rng) {
    train_set.Clear();
    for (const GameRecord* r : train) {
      if (options.use_color_shuffle) {
        std::vector<int> perm(config.colors);
        std::iota(perm.begin(), perm.end(), 0);
        rng.Shuffle(std::span<int>(perm));
        Extract(hanabi::ApplyColorPermutation(*r, perm), enc, cond, &train_set);
      } else {
        Extract(*r, enc, cond, &train_set);
      }
    }
  };

  std::vector<int> sizes = {enc.size()};
  sizes.insert(sizes.end(), hyper.hidden.begin(), hyper.hidden.end());
  sizes.push_back(config.NumActions());
  Mlp net(sizes, DeriveSeed(hyper.seed, 1));
  Adam opt(net, AdamConfig{.lr = hyper.lr});
  Rng rng(DeriveSeed(hyper.seed, 2));

  TrainReport rep;
  rep.train_games = static_cast<int>(train.size());
  rep.val_games = n_val == 0 ? 0 : static_cast<int>(val.size());
  rep.val_samples = val_set.size();
  Mlp best = net;
  double best_acc = -1.0;
  int since_best = 0;

  build_train(rng);
  if (train_set.size() == 0) throw TrainingError("dataset contains no trainable decisions");
  rep.train_samples = train_set.size();

  Mlp::Gradients grads = net.ZeroGradients();
  std::vector<int64_t> order;
  std::vector<uint64_t> bmask;
  std::vector<int> bact;
  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    if (epoch > 1 && options.use_color_shuffle) build_train(rng);
    order.resize(train_set.size());
    std::iota(order.begin(), order.end(), 0);
    rng.Shuffle(std::span<int64_t>(order));
    double loss_sum = 0.0;
    int batches = 0;
    for (int64_t start = 0; start < train_set.size(); start += hyper.batch_size) {
      const int n = static_cast<int>(std::min<int64_t>(hyper.batch_size, train_set.size() - start));
      Matrix x(enc.size(), n);
      bmask.resize(n);
      bact.resize(n);
      for (int i = 0; i < n; ++i) {
        const int64_t k = order[start + i];
        x.col(i) = Eigen::Map<const Vector>(train_set.x.data() + k * train_set.dim, train_set.dim);
        bmask[i] = train_set.mask[k];
        bact[i] = train_set.action[k];
      }
      Mlp::Tape tape;
      const Matrix logits = net.Forward(x, &tape);
      Matrix d;
      const double loss = MaskedCrossEntropy(logits, bmask, bact, &d, nullptr);
      grads.SetZero();
      net.Backward(tape, d, &grads);
      opt.Step(&net, grads);
      loss_sum += loss;
      ++batches;
      if (epoch == 1) rep.first_epoch_batch_losses.push_back(loss);
    }
    const EvalResult ev = Evaluate(net, val_set);
    rep.epochs.push_back({epoch, loss_sum / std::max(batches, 1), ev.loss, ev.accuracy});
    if (ev.accuracy > best_acc) {
      best_acc = ev.accuracy;
      best = net;
      rep.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= hyper.patience) {
      break;
    }
  }
  const EvalResult final_eval = Evaluate(best, val_set);
  rep.best_val_accuracy = final_eval.accuracy;
  rep.val_accuracy_by_label = final_eval.by_label;
  if (report) *report = rep;
  return std::make_shared<NetworkPolicy>(config, vocab, cond, std::move(best), options.name);
}

}  // namespace pikl::policy
