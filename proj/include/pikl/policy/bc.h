#ifndef PIKL_POLICY_BC_H_
#define PIKL_POLICY_BC_H_

#include <map>
#include <memory>
#include <vector>

#include "json.hpp"
#include "pikl/hanabi/record.h"
#include "pikl/policy/network.h"

namespace pikl::policy {

// Fixed defaults; nothing here is tuned per experiment.
struct TrainConfig {
  std::vector<int> hidden = {128};
  double lr = 1e-3;
  int batch_size = 128;
  int max_epochs = 30;
  int patience = 5;  // stop after this many epochs without a new best
  // Fraction of games, taken from the end of the dataset, held out. 0 means
  // "validate on the training games" (only sensible for overfit checks).
  double validation_fraction = 0.05;
  uint64_t seed = 1;

  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct BcOptions {
  bool use_color_shuffle = false;
  bool condition_on_lambda = false;
  std::vector<double> lambda_vocabulary;  // required when condition_on_lambda
  std::string name = "bc";
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainReport {
  int train_games = 0;
  int val_games = 0;
  int64_t train_samples = 0;
  int64_t val_samples = 0;
  std::vector<EpochStats> epochs;
  int best_epoch = 0;
  double best_val_accuracy = 0.0;
  std::vector<double> first_epoch_batch_losses;
  // Held-out accuracy of the returned model, split by λ label (label-less
  // samples are keyed by -1).
  std::map<double, double> val_accuracy_by_label;

  nlohmann::json ToJson() const;
};

// One training example per decision of each trained seat (a record may list
// the seats in train_players; otherwise both count).
struct BcSample {
  std::vector<float> x;
  uint64_t legal_mask = 0;
  int action = 0;
  double label = -1.0;
};

// Examples from one record under `encoder`.
void ExtractSamples(const hanabi::GameRecord& record, const FeatureEncoder& encoder,
                    bool condition_on_lambda, std::vector<BcSample>* out);

// Top-1 accuracy of `policy` on the decisions of `records`.
double PolicyAccuracy(const Policy& policy, const std::vector<hanabi::GameRecord>& records,
                      bool condition_on_lambda);

// Behavioral cloning with masked cross-entropy and Adam. Throws
// TrainingError for an empty dataset or a held-out split under one game.
std::shared_ptr<NetworkPolicy> BcTrain(const std::vector<hanabi::GameRecord>& dataset,
                                       const BcOptions& options, const TrainConfig& hyper,
                                       TrainReport* report = nullptr);

}  // namespace pikl::policy

#endif  // PIKL_POLICY_BC_H_
