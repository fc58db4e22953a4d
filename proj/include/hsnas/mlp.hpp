#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Core>

namespace hsnas {

/// Fully connected ReLU network with a linear output layer. Activations are
/// column-major batches: one column per example.
template <typename Scalar>
class Mlp {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };

  Mlp() = default;

  /// All weights and biases zero.
  explicit Mlp(std::vector<int> layer_dims) : layer_dims_(std::move(layer_dims)) {
    for (std::size_t l = 0; l + 1 < layer_dims_.size(); ++l) {
      weights_.push_back(Matrix::Zero(layer_dims_[l + 1], layer_dims_[l]));
      biases_.push_back(Vector::Zero(layer_dims_[l + 1]));
    }
  }

  /// He-style uniform initialization: U(-sqrt(6/fan_in), sqrt(6/fan_in)),
  /// zero biases.
  template <typename Engine>
  void initialize(Engine& rng) {
    for (auto& w : weights_) {
      const double limit = std::sqrt(6.0 / static_cast<double>(w.cols()));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = static_cast<Scalar>(dist(rng));
    }
    for (auto& b : biases_) b.setZero();
  }

  const std::vector<int>& layer_dims() const noexcept { return layer_dims_; }
  std::size_t num_layers() const noexcept { return weights_.size(); }
  std::vector<Matrix>& weights() noexcept { return weights_; }
  const std::vector<Matrix>& weights() const noexcept { return weights_; }
  std::vector<Vector>& biases() noexcept { return biases_; }
  const std::vector<Vector>& biases() const noexcept { return biases_; }

  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) n += weights_[l].size() + biases_[l].size();
    return n;
  }

  Matrix forward(const Matrix& input) const {
    Matrix h = input;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (weights_[l] * h).colwise() + biases_[l];
      if (l + 1 < weights_.size()) z = z.cwiseMax(Scalar(0));
      h = std::move(z);
    }
    return h;
  }

  /// Mean squared error over the batch; fills `grads` with its gradient.
  Scalar loss_and_gradients(const Matrix& input, const Matrix& targets, Gradients& grads) const {
    const std::size_t L = weights_.size();
    std::vector<Matrix> activations;
    activations.reserve(L + 1);
    activations.push_back(input);
    for (std::size_t l = 0; l < L; ++l) {
      Matrix z = (weights_[l] * activations.back()).colwise() + biases_[l];
      if (l + 1 < L) z = z.cwiseMax(Scalar(0));
      activations.push_back(std::move(z));
    }
    const Scalar batch = static_cast<Scalar>(input.cols());
    const Matrix residual = activations.back() - targets;
    const Scalar loss = residual.squaredNorm() / (batch * static_cast<Scalar>(targets.rows()));

    grads.weights.resize(L);
    grads.biases.resize(L);
    Matrix delta = residual * (Scalar(2) / (batch * static_cast<Scalar>(targets.rows())));
    for (std::size_t l = L; l-- > 0;) {
      grads.weights[l].noalias() = delta * activations[l].transpose();
      grads.biases[l] = delta.rowwise().sum();
      if (l > 0) {
        Matrix back = weights_[l].transpose() * delta;
        // ReLU derivative; activations[l] is post-activation.
        delta = back.cwiseProduct((activations[l].array() > Scalar(0)).matrix().template cast<Scalar>());
      }
    }
    return loss;
  }

 private:
  std::vector<int> layer_dims_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

/// Adaptive moment estimation with bias correction.
template <typename Scalar>
class AdamOptimizer {
 public:
  using Net = Mlp<Scalar>;

  AdamOptimizer(const Net& net, double learning_rate, double beta1, double beta2, double epsilon)
      : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(epsilon) {
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      m_w_.push_back(Net::Matrix::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
      v_w_.push_back(m_w_.back());
      m_b_.push_back(Net::Vector::Zero(net.biases()[l].size()));
      v_b_.push_back(m_b_.back());
    }
  }

  void step(Net& net, const typename Net::Gradients& g) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(beta1_), b2 = static_cast<Scalar>(beta2_);
    const Scalar c1 = static_cast<Scalar>(1.0 - std::pow(beta1_, t_));
    const Scalar c2 = static_cast<Scalar>(1.0 - std::pow(beta2_, t_));
    const Scalar lr = static_cast<Scalar>(lr_), eps = static_cast<Scalar>(eps_);
    auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
      m = b1 * m + (Scalar(1) - b1) * grad;
      v = b2 * v + (Scalar(1) - b2) * grad.cwiseAbs2();
      param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    };
    for (std::size_t l = 0; l < net.num_layers(); ++l) {
      update(net.weights()[l], m_w_[l], v_w_[l], g.weights[l]);
      update(net.biases()[l], m_b_[l], v_b_[l], g.biases[l]);
    }
  }

 private:
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
  std::vector<typename Net::Matrix> m_w_, v_w_;
  std::vector<typename Net::Vector> m_b_, v_b_;
};

}  // namespace hsnas
