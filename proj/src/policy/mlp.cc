#include "pikl/policy/mlp.h"

#include <cmath>
#include <limits>

#include "pikl/errors.h"
#include "pikl/rng.h"

namespace pikl::policy {

void Mlp::Gradients::SetZero() {
  for (auto& m : w) m.setZero();
  for (auto& v : b) v.setZero();
}

double Mlp::Gradients::SquaredNorm() const {
  double s = 0.0;
  for (const auto& m : w) s += m.cast<double>().squaredNorm();
  for (const auto& v : b) s += v.cast<double>().squaredNorm();
  return s;
}

Mlp::Mlp(std::vector<int> sizes, uint64_t seed) : sizes_(std::move(sizes)) {
  if (sizes_.size() < 2) throw UsageError("an MLP needs at least input and output sizes");
  for (int s : sizes_) {
    if (s < 1) throw UsageError("MLP layer sizes must be positive");
  }
  Rng rng(seed);
  for (size_t l = 0; l + 1 < sizes_.size(); ++l) {
    const int in = sizes_[l];
    const int out = sizes_[l + 1];
    const bool last = l + 2 == sizes_.size();
    // He-uniform for ReLU layers, smaller for the output head.
    const double bound = (last ? 1.0 : std::sqrt(6.0)) / std::sqrt(static_cast<double>(in));
    Matrix w(out, in);
    for (int j = 0; j < in; ++j) {
      for (int i = 0; i < out; ++i) w(i, j) = static_cast<float>(rng.Uniform(-bound, bound));
    }
    w_.push_back(std::move(w));
    b_.push_back(Vector::Zero(out));
  }
}

int64_t Mlp::NumParameters() const {
  int64_t n = 0;
  for (size_t l = 0; l < w_.size(); ++l) n += w_[l].size() + b_[l].size();
  return n;
}

Vector Mlp::Forward(std::span<const float> x) const {
  if (static_cast<int>(x.size()) != input_size()) throw UsageError("MLP input has the wrong size");
  Vector h = Eigen::Map<const Vector>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (size_t l = 0; l < w_.size(); ++l) {
    Vector z = w_[l] * h + b_[l];
    if (l + 1 < w_.size()) z = z.cwiseMax(0.0f);
    h = std::move(z);
  }
  return h;
}

Matrix Mlp::Forward(const Matrix& x) const { return Forward(x, nullptr); }

Matrix Mlp::Forward(const Matrix& x, Tape* tape) const {
  if (x.rows() != input_size()) throw UsageError("MLP input has the wrong size");
  if (tape) tape->inputs.clear();
  Matrix h = x;
  for (size_t l = 0; l < w_.size(); ++l) {
    if (tape) tape->inputs.push_back(h);
    Matrix z = w_[l] * h;
    z.colwise() += b_[l];
    if (l + 1 < w_.size()) z = z.cwiseMax(0.0f);
    h = std::move(z);
  }
  return h;
}

Mlp::Gradients Mlp::ZeroGradients() const {
  Gradients g;
  for (size_t l = 0; l < w_.size(); ++l) {
    g.w.push_back(Matrix::Zero(w_[l].rows(), w_[l].cols()));
    g.b.push_back(Vector::Zero(b_[l].size()));
  }
  return g;
}

void Mlp::Backward(const Tape& tape, const Matrix& d_out, Gradients* grads) const {
  if (tape.inputs.size() != w_.size()) throw UsageError("tape does not match network");
  Matrix delta = d_out;
  for (int l = static_cast<int>(w_.size()) - 1; l >= 0; --l) {
    const Matrix& in = tape.inputs[l];
    grads->w[l].noalias() += delta * in.transpose();
    grads->b[l] += delta.rowwise().sum();
    if (l == 0) break;
    Matrix d_in = w_[l].transpose() * delta;
    // `in` is post-ReLU for l > 0, so in > 0 exactly where the unit was active.
    delta = d_in.cwiseProduct((in.array() > 0.0f).cast<float>().matrix());
  }
}

void Mlp::CopyFrom(const Mlp& other) {
  if (other.sizes_ != sizes_) throw UsageError("cannot copy parameters between different shapes");
  w_ = other.w_;
  b_ = other.b_;
}

bool Mlp::operator==(const Mlp& o) const {
  if (sizes_ != o.sizes_) return false;
  for (size_t l = 0; l < w_.size(); ++l) {
    if (w_[l] != o.w_[l] || b_[l] != o.b_[l]) return false;
  }
  return true;
}

nlohmann::json Mlp::ToJson() const {
  nlohmann::json layers = nlohmann::json::array();
  for (size_t l = 0; l < w_.size(); ++l) {
    std::vector<float> w(w_[l].data(), w_[l].data() + w_[l].size());
    std::vector<float> b(b_[l].data(), b_[l].data() + b_[l].size());
    layers.push_back({{"w", w}, {"b", b}});
  }
  return {{"sizes", sizes_}, {"layout", "column-major"}, {"layers", layers}};
}

Mlp Mlp::FromJson(const nlohmann::json& j) {
  Mlp net;
  try {
    net.sizes_ = j.at("sizes").get<std::vector<int>>();
    const auto& layers = j.at("layers");
    if (net.sizes_.size() < 2 || layers.size() + 1 != net.sizes_.size()) {
      throw FormatError("MLP layer count does not match sizes");
    }
    for (size_t l = 0; l < layers.size(); ++l) {
      const int in = net.sizes_[l];
      const int out = net.sizes_[l + 1];
      const auto w = layers[l].at("w").get<std::vector<float>>();
      const auto b = layers[l].at("b").get<std::vector<float>>();
      if (static_cast<int>(w.size()) != in * out || static_cast<int>(b.size()) != out) {
        throw FormatError("MLP layer " + std::to_string(l) + " has the wrong parameter count");
      }
      net.w_.push_back(Eigen::Map<const Matrix>(w.data(), out, in));
      net.b_.push_back(Eigen::Map<const Vector>(b.data(), out));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed network parameters: ") + e.what());
  }
  return net;
}

Adam::Adam(const Mlp& net, AdamConfig config)
    : config_(config), m_(net.ZeroGradients()), v_(net.ZeroGradients()) {}

void Adam::Step(Mlp* net, const Mlp::Gradients& grads) {
  ++t_;
  float scale = 1.0f;
  if (config_.clip_norm > 0.0) {
    const double norm = std::sqrt(grads.SquaredNorm());
    if (norm > config_.clip_norm) scale = static_cast<float>(config_.clip_norm / norm);
  }
  const float b1 = static_cast<float>(config_.beta1);
  const float b2 = static_cast<float>(config_.beta2);
  const float c1 = static_cast<float>(1.0 - std::pow(config_.beta1, static_cast<double>(t_)));
  const float c2 = static_cast<float>(1.0 - std::pow(config_.beta2, static_cast<double>(t_)));
  const float lr = static_cast<float>(config_.lr);
  const float eps = static_cast<float>(config_.eps);
  auto update = [&](auto& param, auto& m, auto& v, const auto& g_raw) {
    const auto g = (g_raw * scale).eval();
    m = b1 * m + (1.0f - b1) * g;
    v = b2 * v + (1.0f - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (size_t l = 0; l < grads.w.size(); ++l) {
    update(net->weights()[l], m_.w[l], v_.w[l], grads.w[l]);
    update(net->biases()[l], m_.b[l], v_.b[l], grads.b[l]);
  }
}

void SgdStep(Mlp* net, const Mlp::Gradients& grads, double lr) {
  const float f = static_cast<float>(lr);
  for (size_t l = 0; l < grads.w.size(); ++l) {
    net->weights()[l] -= f * grads.w[l];
    net->biases()[l] -= f * grads.b[l];
  }
}

std::vector<double> MaskedLogSoftmax(std::span<const float> logits, uint64_t legal_mask) {
  const double ninf = -std::numeric_limits<double>::infinity();
  std::vector<double> out(logits.size(), ninf);
  double mx = ninf;
  for (size_t i = 0; i < logits.size(); ++i) {
    if ((legal_mask >> i) & 1ULL) mx = std::max(mx, static_cast<double>(logits[i]));
  }
  if (mx == ninf) return out;
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    if ((legal_mask >> i) & 1ULL) z += std::exp(static_cast<double>(logits[i]) - mx);
  }
  const double lz = mx + std::log(z);
  for (size_t i = 0; i < logits.size(); ++i) {
    if ((legal_mask >> i) & 1ULL) out[i] = static_cast<double>(logits[i]) - lz;
  }
  return out;
}

std::vector<double> MaskedSoftmax(std::span<const float> logits, uint64_t legal_mask) {
  std::vector<double> out = MaskedLogSoftmax(logits, legal_mask);
  double total = 0.0;
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = ((legal_mask >> i) & 1ULL) ? std::exp(out[i]) : 0.0;
    total += out[i];
  }
  if (total > 0.0) {
    for (double& p : out) p /= total;
  }
  return out;
}

}  // namespace pikl::policy
