#ifndef PIKL_POLICY_NETWORK_H_
#define PIKL_POLICY_NETWORK_H_

#include <memory>
#include <string>

#include "pikl/policy/checkpoint.h"
#include "pikl/policy/features.h"
#include "pikl/policy/mlp.h"
#include "pikl/policy/policy.h"

namespace pikl::policy {

// Feed-forward policy over the encoder's features: masked softmax of the
// network's logits. When `conditioned` the λ block is part of the input;
// otherwise it is empty and any λ passed in is ignored.
class NetworkPolicy : public Policy {
 public:
  NetworkPolicy(const hanabi::GameConfig& config, std::vector<double> lambda_vocabulary,
                bool conditioned, Mlp net, std::string name = "network");

  std::string Name() const override { return name_; }
  const hanabi::GameConfig& config() const override { return config_; }
  bool LambdaConditioned() const override { return conditioned_; }
  ActionProbs Probs(AohView aoh, std::optional<double> lambda) const override;
  void BatchProbs(std::span<const Observation* const> obs, std::optional<double> lambda,
                  std::vector<ActionProbs>* out) const override;

  const FeatureEncoder& encoder() const { return encoder_; }
  const Mlp& net() const { return net_; }
  const std::vector<double>& lambda_vocabulary() const { return vocabulary_; }

  Checkpoint ToCheckpoint() const;
  static std::shared_ptr<NetworkPolicy> FromCheckpoint(const Checkpoint& c);

 private:
  std::optional<double> InputLambda(std::optional<double> lambda) const {
    return conditioned_ ? lambda : std::nullopt;
  }

  hanabi::GameConfig config_;
  std::vector<double> vocabulary_;
  bool conditioned_;
  FeatureEncoder encoder_;
  Mlp net_;
  std::string name_;
};

std::shared_ptr<NetworkPolicy> LoadNetworkPolicy(
    const std::string& path, const std::optional<hanabi::GameConfig>& expected = std::nullopt);

}  // namespace pikl::policy

#endif  // PIKL_POLICY_NETWORK_H_
