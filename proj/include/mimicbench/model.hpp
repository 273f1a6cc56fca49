// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mimicbench/ops.hpp"
#include "mimicbench/rng.hpp"
#include "mimicbench/tensor.hpp"

namespace mimicbench {

/// One node of a feed-forward graph. Layers cache whatever the matching
/// backward pass needs; a forward call invalidates the previous cache.
template <typename Scalar>
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training, RngStream& rng) = 0;
  virtual Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) = 0;
  virtual void collect_params(std::vector<Parameter<Scalar>*>& out) { (void)out; }
  virtual std::string kind() const = 0;
  virtual std::unique_ptr<Layer<Scalar>> clone() const = 0;
};

template <typename Scalar>
class Conv2dLayer final : public Layer<Scalar> {
 public:
  Conv2dLayer(std::string name, Tensor<Scalar> weight, Tensor<Scalar> bias, ops::Activation act)
      : weight_(name + ".weight", std::move(weight), ParamRole::kWeight),
        bias_(name + ".bias", std::move(bias), ParamRole::kBias),
        act_(act) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool, RngStream&) override {
    input_ = x;
    Tensor<Scalar> y = ops::conv2d_forward(x, weight_.value, bias_.value);
    if (act_ == ops::Activation::kRelu) y.vector() = y.vector().cwiseMax(Scalar(0));
    output_ = y;
    return y;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override {
    Tensor<Scalar> dpre = grad_out;
    if (act_ == ops::Activation::kRelu)
      dpre.vector() =
          (output_.vector().array() > Scalar(0)).template cast<Scalar>() * grad_out.vector().array();
    auto g = ops::conv2d_backward(input_, weight_.value, dpre);
    weight_.grad.vector() += g.weight.vector();
    bias_.grad.vector() += g.bias.vector();
    return std::move(g.input);
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  std::string kind() const override { return "conv"; }
  std::unique_ptr<Layer<Scalar>> clone() const override {
    return std::make_unique<Conv2dLayer>(*this);
  }

  Index filters() const { return weight_.value.dim(0); }
  Index kernel() const { return weight_.value.dim(2); }
  ops::Activation activation() const { return act_; }
  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }

 private:
  Parameter<Scalar> weight_;
  Parameter<Scalar> bias_;
  ops::Activation act_;
  Tensor<Scalar> input_;
  Tensor<Scalar> output_;
};

template <typename Scalar>
class MaxPool2dLayer final : public Layer<Scalar> {
 public:
  explicit MaxPool2dLayer(Index window) : window_(window) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool, RngStream&) override {
    input_shape_ = x.shape();
    auto r = ops::maxpool2d_forward(x, window_);
    argmax_ = std::move(r.argmax);
    return std::move(r.output);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override {
    return ops::maxpool2d_backward(argmax_, input_shape_, grad_out);
  }

  std::string kind() const override { return "maxpool"; }
  std::unique_ptr<Layer<Scalar>> clone() const override {
    return std::make_unique<MaxPool2dLayer>(*this);
  }
  Index window() const { return window_; }

 private:
  Index window_;
  Shape input_shape_;
  std::vector<Index> argmax_;
};

template <typename Scalar>
class DropoutLayer final : public Layer<Scalar> {
 public:
  explicit DropoutLayer(double rate) : rate_(rate) {
    if (rate < 0.0 || rate >= 1.0) throw ValueError("dropout rate must lie in [0, 1)");
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool training, RngStream& rng) override {
    if (!training || rate_ == 0.0) {
      identity_ = true;
      return x;
    }
    identity_ = false;
    auto r = ops::dropout_forward(x, rate_, rng);
    mask_ = std::move(r.mask);
    return std::move(r.output);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override {
    if (identity_) return grad_out;
    return ops::dropout_backward(mask_, grad_out);
  }

  std::string kind() const override { return "dropout"; }
  std::unique_ptr<Layer<Scalar>> clone() const override {
    return std::make_unique<DropoutLayer>(*this);
  }
  double rate() const { return rate_; }

 private:
  double rate_;
  bool identity_ = true;
  Tensor<Scalar> mask_;
};

template <typename Scalar>
class FlattenLayer final : public Layer<Scalar> {
 public:
  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool, RngStream&) override {
    input_shape_ = x.shape();
    return x.reshaped({x.dim(0), x.size() / x.dim(0)});
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override {
    return grad_out.reshaped(input_shape_);
  }

  std::string kind() const override { return "flatten"; }
  std::unique_ptr<Layer<Scalar>> clone() const override {
    return std::make_unique<FlattenLayer>(*this);
  }

 private:
  Shape input_shape_;
};

enum class AffineRole { kHidden, kBottleneck, kOutput };

template <typename Scalar>
class AffineLayer final : public Layer<Scalar> {
 public:
  AffineLayer(std::string name, Tensor<Scalar> weight, Tensor<Scalar> bias, ops::Activation act,
              AffineRole role)
      : weight_(name + ".weight", std::move(weight), ParamRole::kWeight),
        bias_(name + ".bias", std::move(bias), ParamRole::kBias),
        act_(act),
        role_(role) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, bool, RngStream&) override {
    input_ = x;
    output_ = ops::affine_forward(x, weight_.value, bias_.value, act_);
    return output_;
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_out) override {
    auto g = ops::affine_backward(input_, weight_.value, output_, act_, grad_out);
    weight_.grad.vector() += g.weight.vector();
    bias_.grad.vector() += g.bias.vector();
    return std::move(g.input);
  }

  void collect_params(std::vector<Parameter<Scalar>*>& out) override {
    out.push_back(&weight_);
    out.push_back(&bias_);
  }

  std::string kind() const override {
    switch (role_) {
      case AffineRole::kBottleneck: return "linear_bottleneck";
      case AffineRole::kOutput: return "output";
      default: return "fc";
    }
  }
  std::unique_ptr<Layer<Scalar>> clone() const override {
    return std::make_unique<AffineLayer>(*this);
  }

  Index in_features() const { return weight_.value.dim(0); }
  Index units() const { return weight_.value.dim(1); }
  ops::Activation activation() const { return act_; }
  AffineRole role() const { return role_; }
  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }

 private:
  Parameter<Scalar> weight_;
  Parameter<Scalar> bias_;
  ops::Activation act_;
  AffineRole role_;
  Tensor<Scalar> input_;
  Tensor<Scalar> output_;
};

/// Ordered layer list with a training-mode flag. Evaluation mode is a pure
/// function of (input, weights); forward rejects non-finite outputs.
template <typename Scalar>
class ModelGraph {
 public:
  ModelGraph() = default;

  ModelGraph(const ModelGraph& other)
      : arch_label_(other.arch_label_), training_(other.training_), rng_(other.rng_) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
  }
  ModelGraph& operator=(const ModelGraph& other) {
    if (this != &other) {
      ModelGraph tmp(other);
      *this = std::move(tmp);
    }
    return *this;
  }
  ModelGraph(ModelGraph&&) noexcept = default;
  ModelGraph& operator=(ModelGraph&&) noexcept = default;

  void add(std::unique_ptr<Layer<Scalar>> layer) { layers_.push_back(std::move(layer)); }

  Tensor<Scalar> forward(const Tensor<Scalar>& input) {
    Tensor<Scalar> x = input;
    for (auto& layer : layers_) x = layer->forward(x, training_, rng_);
    if (!x.all_finite())
      throw RunError("non-finite values in model output (architecture " + arch_label_ + ")");
    return x;
  }

  /// Propagates d(loss)/d(logits) back through the graph, accumulating into
  /// parameter grads. Returns d(loss)/d(input).
  Tensor<Scalar> backward(const Tensor<Scalar>& grad_logits) {
    Tensor<Scalar> g = grad_logits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
  }

  void zero_grad() {
    for (auto* p : params()) p->zero_grad();
  }

  std::vector<Parameter<Scalar>*> params() {
    std::vector<Parameter<Scalar>*> out;
    for (auto& layer : layers_) layer->collect_params(out);
    return out;
  }

  Index param_count() {
    Index n = 0;
    for (auto* p : params()) n += p->value.size();
    return n;
  }

  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }

  void set_rng(RngStream rng) { rng_ = rng; }
  RngStream& rng() { return rng_; }

  std::vector<std::unique_ptr<Layer<Scalar>>>& layers() { return layers_; }
  const std::vector<std::unique_ptr<Layer<Scalar>>>& layers() const { return layers_; }

  void set_arch_label(std::string label) { arch_label_ = std::move(label); }
  const std::string& arch_label() const { return arch_label_; }

  bool has_dropout() const {
    for (const auto& l : layers_)
      if (l->kind() == "dropout") return true;
    return false;
  }

 private:
  std::vector<std::unique_ptr<Layer<Scalar>>> layers_;
  std::string arch_label_;
  bool training_ = false;
  RngStream rng_ = RngStream::seeded(0);
};

}  // namespace mimicbench
