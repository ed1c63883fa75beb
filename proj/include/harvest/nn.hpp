// Copyright 2026 The Harvest Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fully-connected tanh networks with hand-written reverse-mode gradients,
// diagonal Gaussian action heads, and an Adam optimizer. Batches are stored
// column-major: one sample per column.

#ifndef HARVEST_NN_HPP_
#define HARVEST_NN_HPP_

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace harvest::nn {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// A forward or backward pass produced NaN/Inf.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(int layer, const std::string& what)
      : std::runtime_error("non-finite value at layer " + std::to_string(layer) + ": " + what),
        layer_(layer) {}
  int layer() const { return layer_; }

 private:
  int layer_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Multilayer perceptron: tanh on hidden layers, linear output. All
/// parameters live in one flat vector, layer by layer, each layer's weight
/// (column-major, out x in) followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw ShapeError("an Mlp needs at least input and output widths");
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
      if (widths_[l] <= 0 || widths_[l + 1] <= 0) throw ShapeError("layer widths must be positive");
      offsets_.push_back(total);
      total += static_cast<std::size_t>(widths_[l + 1]) * (widths_[l] + 1);
    }
    params_ = VectorXd::Zero(static_cast<Eigen::Index>(total));
  }

  /// Gaussian init with std gain/sqrt(fan_in); hidden gain sqrt(2), output
  /// gain `output_gain`. Biases start at zero.
  void init(std::mt19937_64& rng, double output_gain = 1.0) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int l = 0; l < num_layers(); ++l) {
      const double gain = (l + 1 == num_layers()) ? output_gain : std::numbers::sqrt2;
      const double scale = gain / std::sqrt(static_cast<double>(widths_[l]));
      auto w = weight(l);
      for (Eigen::Index k = 0; k < w.size(); ++k) w.data()[k] = scale * normal(rng);
      bias(l).setZero();
    }
  }

  int num_layers() const { return static_cast<int>(widths_.size()) - 1; }
  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  Eigen::Index param_count() const { return params_.size(); }

  VectorXd& params() { return params_; }
  const VectorXd& params() const { return params_; }

  Eigen::Map<MatrixXd> weight(int l) {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<const MatrixXd> weight(int l) const {
    return {params_.data() + offsets_[l], widths_[l + 1], widths_[l]};
  }
  Eigen::Map<VectorXd> bias(int l) {
    return {params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]};
  }
  Eigen::Map<const VectorXd> bias(int l) const {
    return {params_.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]};
  }

  /// Post-activation outputs of every layer; `layers[0]` is the input.
  struct Cache {
    std::vector<MatrixXd> layers;
  };

  MatrixXd forward_batch(const MatrixXd& x, Cache* cache = nullptr) const {
    if (x.rows() != input_dim())
      throw ShapeError("input has " + std::to_string(x.rows()) + " rows, expected " +
                       std::to_string(input_dim()));
    MatrixXd h = x;
    if (cache) {
      cache->layers.clear();
      cache->layers.push_back(h);
    }
    for (int l = 0; l < num_layers(); ++l) {
      MatrixXd z = weight(l) * h;
      z.colwise() += bias(l);
      if (l + 1 < num_layers()) z = z.array().tanh().matrix();
      if (!z.allFinite()) throw NumericalError(l, "forward");
      h = std::move(z);
      if (cache) cache->layers.push_back(h);
    }
    return h;
  }

  VectorXd forward(const VectorXd& x) const { return forward_batch(x); }

  /// Reverse pass. Adds d(loss)/d(params) into `grad` and returns
  /// d(loss)/d(input).
  MatrixXd backward(const Cache& cache, const MatrixXd& d_output, VectorXd& grad) const {
    if (grad.size() != param_count()) throw ShapeError("gradient buffer has the wrong size");
    if (d_output.rows() != output_dim() || d_output.cols() != cache.layers.back().cols())
      throw ShapeError("output gradient shape mismatch");
    MatrixXd dz = d_output;
    for (int l = num_layers() - 1; l >= 0; --l) {
      if (l + 1 < num_layers()) {
        // tanh' = 1 - tanh^2, using the cached post-activation.
        dz.array() *= 1.0 - cache.layers[l + 1].array().square();
      }
      const MatrixXd& input = cache.layers[l];
      Eigen::Map<MatrixXd> gw(grad.data() + offsets_[l], widths_[l + 1], widths_[l]);
      Eigen::Map<VectorXd> gb(grad.data() + offsets_[l] + widths_[l + 1] * widths_[l], widths_[l + 1]);
      gw.noalias() += dz * input.transpose();
      gb += dz.rowwise().sum();
      MatrixXd dh = weight(l).transpose() * dz;
      if (!dh.allFinite()) throw NumericalError(l, "backward");
      dz = std::move(dh);
    }
    return dz;
  }

 private:
  std::vector<int> widths_;
  std::vector<std::size_t> offsets_;
  VectorXd params_;
};

struct ValueAndGrad {
  double value = 0.0;
  VectorXd grad;
};

/// Reverse-mode gradient of `loss(output) -> {value, d value / d output}`
/// composed with the network applied to the batch `x`.
template <typename LossFn>
ValueAndGrad value_and_grad(const Mlp& net, const MatrixXd& x, LossFn&& loss) {
  Mlp::Cache cache;
  const MatrixXd y = net.forward_batch(x, &cache);
  auto [value, dy] = loss(y);
  if (!std::isfinite(value)) throw NumericalError(net.num_layers(), "loss");
  ValueAndGrad out{value, VectorXd::Zero(net.param_count())};
  net.backward(cache, dy, out.grad);
  return out;
}

// ---------------------------------------------------------------------------
// Diagonal Gaussian.

inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

/// State-independent log standard deviations for a diagonal Gaussian.
struct GaussianHead {
  VectorXd log_std;

  GaussianHead() = default;
  GaussianHead(int dim, double init_std) : log_std(VectorXd::Constant(dim, std::log(init_std))) {}
  int dim() const { return static_cast<int>(log_std.size()); }
  VectorXd std_dev() const { return log_std.array().exp(); }
};

inline double gaussian_log_prob(const VectorXd& mean, const VectorXd& log_std, const VectorXd& x) {
  const auto z = ((x - mean).array() / log_std.array().exp());
  return (-0.5 * z.square() - log_std.array() - kLogSqrt2Pi).sum();
}

inline double gaussian_entropy(const VectorXd& log_std) {
  return (log_std.array() + 0.5 + kLogSqrt2Pi).sum();
}

struct GaussianSample {
  VectorXd action;
  double log_prob = 0.0;
  double entropy = 0.0;
};

inline GaussianSample sample_and_logprob(const GaussianHead& head, const VectorXd& mean, std::mt19937_64& rng) {
  if (mean.size() != head.dim()) throw ShapeError("mean and head dimensions differ");
  std::normal_distribution<double> normal(0.0, 1.0);
  GaussianSample s;
  s.action.resize(mean.size());
  for (Eigen::Index k = 0; k < mean.size(); ++k) s.action[k] = mean[k] + std::exp(head.log_std[k]) * normal(rng);
  s.log_prob = gaussian_log_prob(mean, head.log_std, s.action);
  s.entropy = gaussian_entropy(head.log_std);
  return s;
}

/// KL(p || q) between diagonal Gaussians, summed over dimensions.
inline double gaussian_kl(const VectorXd& mean_p, const VectorXd& log_std_p, const VectorXd& mean_q,
                          const VectorXd& log_std_q) {
  const auto var_p = (2.0 * log_std_p.array()).exp();
  const auto var_q = (2.0 * log_std_q.array()).exp();
  return (log_std_q.array() - log_std_p.array() + (var_p + (mean_p - mean_q).array().square()) / (2.0 * var_q) -
          0.5)
      .sum();
}

// ---------------------------------------------------------------------------
// Adam.

struct Adam {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  VectorXd first_moment;
  VectorXd second_moment;
  long steps = 0;

  Adam() = default;
  explicit Adam(double lr) : learning_rate(lr) {}

  void step(VectorXd& params, const VectorXd& grad) {
    if (grad.size() != params.size()) throw ShapeError("parameter and gradient sizes differ");
    if (first_moment.size() != params.size()) {
      first_moment = VectorXd::Zero(params.size());
      second_moment = VectorXd::Zero(params.size());
      steps = 0;
    }
    ++steps;
    first_moment = beta1 * first_moment + (1.0 - beta1) * grad;
    second_moment = beta2 * second_moment + (1.0 - beta2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(steps));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(steps));
    params.array() -= learning_rate * (first_moment.array() / c1) /
                      ((second_moment.array() / c2).sqrt() + epsilon);
  }
};

/// Rescales `grad` in place so its 2-norm is at most `max_norm`; returns the
/// original norm.
inline double clip_grad_norm(VectorXd& grad, double max_norm) {
  const double norm = grad.norm();
  if (max_norm > 0.0 && norm > max_norm) grad *= max_norm / norm;
  return norm;
}

// ---------------------------------------------------------------------------
// Checkpoints: "HARVEST-CKPT-1\n", u64 array count, then per array: u64 key
// length, key bytes, u64 rank, u64 dims, little-endian f64 data.

struct Tensor {
  std::vector<std::uint64_t> shape;
  std::vector<double> data;
};

using Checkpoint = std::map<std::string, Tensor>;

inline constexpr char kCheckpointMagic[] = "HARVEST-CKPT-1\n";

namespace detail {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("truncated checkpoint");
  return to_little(v);
}

}  // namespace detail

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  detail::put<std::uint64_t>(out, ckpt.size());
  for (const auto& [key, t] : ckpt) {
    detail::put<std::uint64_t>(out, key.size());
    out.write(key.data(), static_cast<std::streamsize>(key.size()));
    detail::put<std::uint64_t>(out, t.shape.size());
    for (auto d : t.shape) detail::put<std::uint64_t>(out, d);
    for (double v : t.data) detail::put<double>(out, v);
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path);
}

inline Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path);
  std::string magic(sizeof(kCheckpointMagic) - 1, '\0');
  in.read(magic.data(), static_cast<std::streamsize>(magic.size()));
  if (!in || magic != kCheckpointMagic) throw std::runtime_error(path + ": not a harvest checkpoint");
  Checkpoint ckpt;
  const auto count = detail::get<std::uint64_t>(in);
  for (std::uint64_t a = 0; a < count; ++a) {
    const auto key_len = detail::get<std::uint64_t>(in);
    if (key_len > 4096) throw std::runtime_error(path + ": corrupt key length");
    std::string key(key_len, '\0');
    in.read(key.data(), static_cast<std::streamsize>(key_len));
    Tensor t;
    const auto rank = detail::get<std::uint64_t>(in);
    if (rank > 8) throw std::runtime_error(path + ": corrupt rank for " + key);
    std::uint64_t n = 1;
    for (std::uint64_t r = 0; r < rank; ++r) {
      t.shape.push_back(detail::get<std::uint64_t>(in));
      n *= t.shape.back();
    }
    if (n > (1ull << 32)) throw std::runtime_error(path + ": corrupt shape for " + key);
    t.data.resize(n);
    for (auto& v : t.data) v = detail::get<double>(in);
    ckpt.emplace(std::move(key), std::move(t));
  }
  return ckpt;
}

/// Stores an Mlp under `prefix`: "<prefix>/widths" plus "<prefix>/layer<l>/weight|bias".
inline void store(Checkpoint& ckpt, const std::string& prefix, const Mlp& net) {
  Tensor widths{{net.widths().size()}, {}};
  for (int w : net.widths()) widths.data.push_back(w);
  ckpt[prefix + "/widths"] = widths;
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto w = net.weight(l);
    const auto b = net.bias(l);
    ckpt[prefix + "/layer" + std::to_string(l) + "/weight"] =
        Tensor{{static_cast<std::uint64_t>(w.rows()), static_cast<std::uint64_t>(w.cols())},
               std::vector<double>(w.data(), w.data() + w.size())};
    ckpt[prefix + "/layer" + std::to_string(l) + "/bias"] =
        Tensor{{static_cast<std::uint64_t>(b.size())}, std::vector<double>(b.data(), b.data() + b.size())};
  }
}

inline void store(Checkpoint& ckpt, const std::string& key, const VectorXd& v) {
  ckpt[key] = Tensor{{static_cast<std::uint64_t>(v.size())}, std::vector<double>(v.data(), v.data() + v.size())};
}

inline const Tensor& fetch(const Checkpoint& ckpt, const std::string& key) {
  auto it = ckpt.find(key);
  if (it == ckpt.end()) throw std::runtime_error("checkpoint has no entry \"" + key + "\"");
  return it->second;
}

inline VectorXd restore_vector(const Checkpoint& ckpt, const std::string& key) {
  const auto& t = fetch(ckpt, key);
  return Eigen::Map<const VectorXd>(t.data.data(), static_cast<Eigen::Index>(t.data.size()));
}

inline Mlp restore_mlp(const Checkpoint& ckpt, const std::string& prefix) {
  const auto& wt = fetch(ckpt, prefix + "/widths");
  std::vector<int> widths;
  for (double w : wt.data) widths.push_back(static_cast<int>(w));
  Mlp net(widths);
  for (int l = 0; l < net.num_layers(); ++l) {
    const auto& w = fetch(ckpt, prefix + "/layer" + std::to_string(l) + "/weight");
    const auto& b = fetch(ckpt, prefix + "/layer" + std::to_string(l) + "/bias");
    if (w.data.size() != static_cast<std::size_t>(net.weight(l).size()) ||
        b.data.size() != static_cast<std::size_t>(net.bias(l).size()))
      throw std::runtime_error("checkpoint shape mismatch in " + prefix + " layer " + std::to_string(l));
    net.weight(l) = Eigen::Map<const MatrixXd>(w.data.data(), net.weight(l).rows(), net.weight(l).cols());
    net.bias(l) = Eigen::Map<const VectorXd>(b.data.data(), net.bias(l).size());
  }
  return net;
}

}  // namespace harvest::nn

#endif  // HARVEST_NN_HPP_
