#include "pikl/policy/network.h"

#include "pikl/errors.h"

namespace pikl::policy {

NetworkPolicy::NetworkPolicy(const hanabi::GameConfig& config,
                             std::vector<double> lambda_vocabulary, bool conditioned, Mlp net,
                             std::string name)
    : config_(config),
      vocabulary_(std::move(lambda_vocabulary)),
      conditioned_(conditioned),
      encoder_(config, conditioned ? vocabulary_ : std::vector<double>{}),
      net_(std::move(net)),
      name_(std::move(name)) {
  if (net_.input_size() != encoder_.size() || net_.output_size() != config_.NumActions()) {
    throw UsageError("network shape does not match the encoder and action space");
  }
}

ActionProbs NetworkPolicy::Probs(AohView aoh, std::optional<double> lambda) const {
  const Observation& obs = aoh.back();
  thread_local std::vector<float> x;
  x.resize(encoder_.size());
  encoder_.EncodeInto(obs, InputLambda(lambda), x);
  const Vector logits = net_.Forward(x);
  return MaskedSoftmax(std::span<const float>(logits.data(), logits.size()), obs.legal_mask);
}

void NetworkPolicy::BatchProbs(std::span<const Observation* const> obs,
                               std::optional<double> lambda, std::vector<ActionProbs>* out) const {
  out->resize(obs.size());
  if (obs.empty()) return;
  const int n = static_cast<int>(obs.size());
  Matrix x(encoder_.size(), n);
  for (int i = 0; i < n; ++i) {
    encoder_.EncodeInto(*obs[i], InputLambda(lambda),
                        std::span<float>(x.col(i).data(), encoder_.size()));
  }
  const Matrix logits = net_.Forward(x);
  for (int i = 0; i < n; ++i) {
    (*out)[i] = MaskedSoftmax(std::span<const float>(logits.col(i).data(), logits.rows()),
                              obs[i]->legal_mask);
  }
}

Checkpoint NetworkPolicy::ToCheckpoint() const {
  Checkpoint c;
  c.kind = "policy";
  c.config = config_;
  c.encoder_schema_version = kEncoderSchemaVersion;
  c.lambda_vocabulary = vocabulary_;
  c.params = {{"conditioned", conditioned_}, {"name", name_}, {"net", net_.ToJson()}};
  return c;
}

std::shared_ptr<NetworkPolicy> NetworkPolicy::FromCheckpoint(const Checkpoint& c) {
  if (c.kind != "policy") throw FormatError("checkpoint does not hold a policy network");
  try {
    return std::make_shared<NetworkPolicy>(c.config, c.lambda_vocabulary,
                                           c.params.at("conditioned").get<bool>(),
                                           Mlp::FromJson(c.params.at("net")),
                                           c.params.value("name", std::string("network")));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed policy checkpoint: ") + e.what());
  } catch (const UsageError& e) {
    throw FormatError(std::string("policy checkpoint: ") + e.what());
  }
}

std::shared_ptr<NetworkPolicy> LoadNetworkPolicy(const std::string& path,
                                                 const std::optional<hanabi::GameConfig>& expected) {
  return NetworkPolicy::FromCheckpoint(LoadCheckpoint(path, "policy", expected));
}

}  // namespace pikl::policy
