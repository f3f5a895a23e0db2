#ifndef PIKL_POLICY_MLP_H_
#define PIKL_POLICY_MLP_H_

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace pikl::policy {

using Matrix = Eigen::MatrixXf;  // column-major; one sample per column in batches
using Vector = Eigen::VectorXf;

// Fully connected ReLU network. sizes = {in, hidden..., out}; the output layer
// is linear. With no hidden layers this is a plain linear model.
class Mlp {
 public:
  struct Gradients {
    std::vector<Matrix> w;
    std::vector<Vector> b;
    void SetZero();
    double SquaredNorm() const;
  };
  // Activations kept by a training forward pass.
  struct Tape {
    std::vector<Matrix> inputs;  // input to each layer
  };

  Mlp() = default;
  Mlp(std::vector<int> sizes, uint64_t seed);

  int input_size() const { return sizes_.front(); }
  int output_size() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  int num_layers() const { return static_cast<int>(w_.size()); }
  int64_t NumParameters() const;

  // x is input_size() floats.
  Vector Forward(std::span<const float> x) const;
  // X is input_size() x batch.
  Matrix Forward(const Matrix& x) const;
  Matrix Forward(const Matrix& x, Tape* tape) const;

  // Accumulates dL/dparams for the batch recorded in `tape` given dL/dout.
  void Backward(const Tape& tape, const Matrix& d_out, Gradients* grads) const;
  Gradients ZeroGradients() const;

  // Parameter-wise copy (target network sync); sizes must match.
  void CopyFrom(const Mlp& other);
  bool operator==(const Mlp& o) const;

  std::vector<Matrix>& weights() { return w_; }
  std::vector<Vector>& biases() { return b_; }
  const std::vector<Matrix>& weights() const { return w_; }
  const std::vector<Vector>& biases() const { return b_; }

  nlohmann::json ToJson() const;
  static Mlp FromJson(const nlohmann::json& j);

 private:
  std::vector<int> sizes_;
  std::vector<Matrix> w_;  // out x in
  std::vector<Vector> b_;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 0.0;  // 0 disables global-norm clipping
};

class Adam {
 public:
  Adam() = default;
  Adam(const Mlp& net, AdamConfig config);
  void Step(Mlp* net, const Mlp::Gradients& grads);
  const AdamConfig& config() const { return config_; }

 private:
  AdamConfig config_;
  Mlp::Gradients m_, v_;
  int64_t t_ = 0;
};

// Plain gradient descent; used where an update must be reproducible by hand.
void SgdStep(Mlp* net, const Mlp::Gradients& grads, double lr);

// Masked softmax over logits; entries with mask bit clear get exactly 0.
std::vector<double> MaskedSoftmax(std::span<const float> logits, uint64_t legal_mask);
// Masked log-softmax; illegal entries are -inf.
std::vector<double> MaskedLogSoftmax(std::span<const float> logits, uint64_t legal_mask);

}  // namespace pikl::policy

#endif  // PIKL_POLICY_MLP_H_
