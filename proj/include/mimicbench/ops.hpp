// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mimicbench/rng.hpp"
#include "mimicbench/tensor.hpp"

namespace mimicbench::ops {

enum class Activation { kLinear, kRelu };

namespace detail {

// Expands one (C,H,W) sample into a (C*K*K) x (H*W) patch matrix for a
// same-padded stride-1 convolution, so the convolution itself becomes a
// single GEMM against the (F, C*K*K) filter matrix.
template <typename Scalar>
void im2col(const Scalar* x, Index C, Index H, Index W, Index K, Scalar* cols) {
  const Index pad = K / 2;
  Index row = 0;
  for (Index c = 0; c < C; ++c) {
    const Scalar* xc = x + c * H * W;
    for (Index ki = 0; ki < K; ++ki) {
      for (Index kj = 0; kj < K; ++kj, ++row) {
        Scalar* out = cols + row * H * W;
        const Index di = ki - pad, dj = kj - pad;
        for (Index oh = 0; oh < H; ++oh) {
          Scalar* orow = out + oh * W;
          const Index ih = oh + di;
          if (ih < 0 || ih >= H) {
            std::fill(orow, orow + W, Scalar(0));
            continue;
          }
          const Scalar* xrow = xc + ih * W;
          const Index lo = std::max<Index>(0, -dj);
          const Index hi = std::min<Index>(W, W - dj);
          for (Index ow = 0; ow < lo; ++ow) orow[ow] = Scalar(0);
          if (hi > lo) std::copy(xrow + lo + dj, xrow + hi + dj, orow + lo);
          for (Index ow = hi; ow < W; ++ow) orow[ow] = Scalar(0);
        }
      }
    }
  }
}

// Scatter-add inverse of im2col.
template <typename Scalar>
void col2im_add(const Scalar* cols, Index C, Index H, Index W, Index K, Scalar* x) {
  const Index pad = K / 2;
  Index row = 0;
  for (Index c = 0; c < C; ++c) {
    Scalar* xc = x + c * H * W;
    for (Index ki = 0; ki < K; ++ki) {
      for (Index kj = 0; kj < K; ++kj, ++row) {
        const Scalar* in = cols + row * H * W;
        const Index di = ki - pad, dj = kj - pad;
        for (Index oh = 0; oh < H; ++oh) {
          const Index ih = oh + di;
          if (ih < 0 || ih >= H) continue;
          const Scalar* irow = in + oh * W;
          Scalar* xrow = xc + ih * W;
          const Index lo = std::max<Index>(0, -dj);
          const Index hi = std::min<Index>(W, W - dj);
          for (Index ow = lo; ow < hi; ++ow) xrow[ow + dj] += irow[ow];
        }
      }
    }
  }
}

template <typename Scalar>
void check_conv_shapes(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                       const Tensor<Scalar>& bias) {
  if (input.rank() != 4)
    throw ShapeError("conv2d expects (batch,channel,height,width) input, got " +
                     shape_str(input.shape()));
  if (weight.rank() != 4)
    throw ShapeError("conv2d expects (filters,channels,k,k) weights, got " +
                     shape_str(weight.shape()));
  if (weight.dim(2) != weight.dim(3)) throw ShapeError("conv2d kernel must be square");
  if (weight.dim(2) % 2 == 0) throw ShapeError("conv2d kernel must be odd for same padding");
  if (input.dim(1) != weight.dim(1))
    throw ShapeError("conv2d channel mismatch: input has " + std::to_string(input.dim(1)) +
                     ", weights expect " + std::to_string(weight.dim(1)));
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(0))
    throw ShapeError("conv2d bias must have one entry per filter");
}

}  // namespace detail

/// Same-padded stride-1 convolution: output spatial size equals input
/// spatial size. weight is (filters, in_channels, k, k), bias (filters).
template <typename Scalar>
Tensor<Scalar> conv2d_forward(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                              const Tensor<Scalar>& bias) {
  detail::check_conv_shapes(input, weight, bias);
  const Index N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const Index F = weight.dim(0), K = weight.dim(2);
  const Index patch = C * K * K, HW = H * W;

  Tensor<Scalar> output({N, F, H, W});
  Tensor<Scalar> cols({patch, HW});
  const auto wmat = weight.matrix(F, patch);
  const auto bvec = bias.vector();
  for (Index n = 0; n < N; ++n) {
    detail::im2col(input.data() + n * C * HW, C, H, W, K, cols.data());
    Eigen::Map<MatrixRM<Scalar>> out(output.data() + n * F * HW, F, HW);
    out.noalias() = wmat * cols.matrix();
    out.colwise() += bvec;
  }
  return output;
}

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> input;
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
};

template <typename Scalar>
ConvGrads<Scalar> conv2d_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                                  const Tensor<Scalar>& grad_output) {
  const Index N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const Index F = weight.dim(0), K = weight.dim(2);
  const Index patch = C * K * K, HW = H * W;
  if (grad_output.shape() != Shape{N, F, H, W})
    throw ShapeError("conv2d_backward: upstream gradient shape mismatch");

  ConvGrads<Scalar> g{Tensor<Scalar>(input.shape()), Tensor<Scalar>(weight.shape()),
                      Tensor<Scalar>(Shape{F})};
  Tensor<Scalar> cols({patch, HW});
  Tensor<Scalar> dcols({patch, HW});
  auto dw = g.weight.matrix(F, patch);
  auto db = g.bias.vector();
  const auto wmat = weight.matrix(F, patch);
  for (Index n = 0; n < N; ++n) {
    detail::im2col(input.data() + n * C * HW, C, H, W, K, cols.data());
    Eigen::Map<const MatrixRM<Scalar>> dy(grad_output.data() + n * F * HW, F, HW);
    dw.noalias() += dy * cols.matrix().transpose();
    db += dy.rowwise().sum();
    dcols.matrix().noalias() = wmat.transpose() * dy;
    detail::col2im_add(dcols.data(), C, H, W, K, g.input.data() + n * C * HW);
  }
  return g;
}

template <typename Scalar>
struct MaxPoolResult {
  Tensor<Scalar> output;
  std::vector<Index> argmax;  // flat input index feeding each output element
};

/// Non-overlapping max pooling with stride equal to the window; trailing
/// rows/columns that do not fill a window are dropped. Ties resolve to the
/// first element in scan order, so the backward pass is a sub-permutation.
template <typename Scalar>
MaxPoolResult<Scalar> maxpool2d_forward(const Tensor<Scalar>& input, Index window) {
  if (input.rank() != 4)
    throw ShapeError("maxpool2d expects a (batch,channel,height,width) input");
  const Index N = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (window < 1 || window > H || window > W)
    throw ShapeError("maxpool2d window " + std::to_string(window) +
                     " exceeds spatial size " + std::to_string(H) + "x" + std::to_string(W));
  const Index Ho = H / window, Wo = W / window;

  MaxPoolResult<Scalar> r{Tensor<Scalar>({N, C, Ho, Wo}), {}};
  r.argmax.resize(static_cast<std::size_t>(N * C * Ho * Wo));
  Index out = 0;
  for (Index n = 0; n < N; ++n)
    for (Index c = 0; c < C; ++c) {
      const Index base = (n * C + c) * H * W;
      for (Index oh = 0; oh < Ho; ++oh)
        for (Index ow = 0; ow < Wo; ++ow, ++out) {
          Index best = base + (oh * window) * W + ow * window;
          Scalar best_v = input[best];
          for (Index i = 0; i < window; ++i)
            for (Index j = 0; j < window; ++j) {
              const Index idx = base + (oh * window + i) * W + (ow * window + j);
              if (input[idx] > best_v) {
                best_v = input[idx];
                best = idx;
              }
            }
          r.output[out] = best_v;
          r.argmax[static_cast<std::size_t>(out)] = best;
        }
    }
  return r;
}

template <typename Scalar>
Tensor<Scalar> maxpool2d_backward(const std::vector<Index>& argmax, const Shape& input_shape,
                                  const Tensor<Scalar>& grad_output) {
  if (static_cast<std::size_t>(grad_output.size()) != argmax.size())
    throw ShapeError("maxpool2d_backward: gradient/argmax size mismatch");
  Tensor<Scalar> dx(input_shape);
  for (Index i = 0; i < grad_output.size(); ++i)
    dx[argmax[static_cast<std::size_t>(i)]] += grad_output[i];
  return dx;
}

/// out = act(input . weight + bias), input (batch, in), weight (in, out).
template <typename Scalar>
Tensor<Scalar> affine_forward(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                              const Tensor<Scalar>& bias, Activation act) {
  if (input.rank() != 2)
    throw ShapeError("affine expects a flattened (batch, features) input, got " +
                     shape_str(input.shape()));
  if (weight.rank() != 2 || input.dim(1) != weight.dim(0))
    throw ShapeError("affine feature mismatch: input " + shape_str(input.shape()) +
                     " vs weights " + shape_str(weight.shape()));
  if (bias.rank() != 1 || bias.dim(0) != weight.dim(1))
    throw ShapeError("affine bias must have one entry per output unit");

  Tensor<Scalar> out({input.dim(0), weight.dim(1)});
  out.matrix().noalias() = input.matrix() * weight.matrix();
  out.matrix().rowwise() += bias.vector().transpose();
  if (act == Activation::kRelu) out.matrix() = out.matrix().cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
struct AffineGrads {
  Tensor<Scalar> input;
  Tensor<Scalar> weight;
  Tensor<Scalar> bias;
};

/// Backward through act(input . weight + bias). `output` is the forward
/// result; for ReLU the mask output > 0 recovers the active set.
template <typename Scalar>
AffineGrads<Scalar> affine_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& weight,
                                    const Tensor<Scalar>& output, Activation act,
                                    const Tensor<Scalar>& grad_output) {
  if (!grad_output.same_shape(output))
    throw ShapeError("affine_backward: upstream gradient shape mismatch");
  Tensor<Scalar> dpre = grad_output;
  if (act == Activation::kRelu)
    dpre.matrix() = (output.matrix().array() > Scalar(0)).template cast<Scalar>() *
                    grad_output.matrix().array();

  AffineGrads<Scalar> g{Tensor<Scalar>(input.shape()), Tensor<Scalar>(weight.shape()),
                        Tensor<Scalar>(Shape{weight.dim(1)})};
  g.weight.matrix().noalias() = input.matrix().transpose() * dpre.matrix();
  g.bias.vector() = dpre.matrix().colwise().sum().transpose();
  g.input.matrix().noalias() = dpre.matrix() * weight.matrix().transpose();
  return g;
}

template <typename Scalar>
struct DropoutResult {
  Tensor<Scalar> output;
  Tensor<Scalar> mask;  // 0 for dropped units, 1/(1-rate) for survivors
};

/// Inverted dropout: survivors are scaled at training time so evaluation is
/// the identity.
template <typename Scalar>
DropoutResult<Scalar> dropout_forward(const Tensor<Scalar>& input, double rate, RngStream& rng) {
  if (rate < 0.0 || rate >= 1.0)
    throw ValueError("dropout rate must lie in [0, 1), got " + std::to_string(rate));
  DropoutResult<Scalar> r{Tensor<Scalar>(input.shape()), Tensor<Scalar>(input.shape())};
  const Scalar keep_scale = static_cast<Scalar>(1.0 / (1.0 - rate));
  for (Index i = 0; i < input.size(); ++i) {
    const Scalar m = rng.next_double() < rate ? Scalar(0) : keep_scale;
    r.mask[i] = m;
    r.output[i] = input[i] * m;
  }
  return r;
}

template <typename Scalar>
Tensor<Scalar> dropout_backward(const Tensor<Scalar>& mask, const Tensor<Scalar>& grad_output) {
  if (!mask.same_shape(grad_output))
    throw ShapeError("dropout_backward: gradient/mask shape mismatch");
  Tensor<Scalar> dx(mask.shape());
  dx.vector() = mask.vector().cwiseProduct(grad_output.vector());
  return dx;
}

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  Tensor<Scalar> grad;  // d loss / d logits
};

/// Mean cross-entropy of softmax(logits) against integer labels,
/// max-stabilized. Gradient is (softmax - onehot) / batch.
template <typename Scalar>
LossResult<Scalar> softmax_xent(const Tensor<Scalar>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw ShapeError("softmax_xent expects (batch, classes) logits");
  const Index N = logits.dim(0), K = logits.dim(1);
  if (static_cast<Index>(labels.size()) != N)
    throw ShapeError("softmax_xent: one label per batch row required");

  LossResult<Scalar> r{0.0, Tensor<Scalar>(logits.shape())};
  double total = 0.0;
  for (Index n = 0; n < N; ++n) {
    const int label = labels[static_cast<std::size_t>(n)];
    if (label < 0 || label >= K)
      throw ValueError("label " + std::to_string(label) + " outside [0, " + std::to_string(K) + ")");
    double maxv = -std::numeric_limits<double>::infinity();
    for (Index k = 0; k < K; ++k) maxv = std::max(maxv, static_cast<double>(logits(n, k)));
    double sum = 0.0;
    for (Index k = 0; k < K; ++k) sum += std::exp(static_cast<double>(logits(n, k)) - maxv);
    const double log_z = std::log(sum) + maxv;
    total += log_z - static_cast<double>(logits(n, label));
    for (Index k = 0; k < K; ++k) {
      const double p = std::exp(static_cast<double>(logits(n, k)) - log_z);
      r.grad(n, k) = static_cast<Scalar>((p - (k == label ? 1.0 : 0.0)) / static_cast<double>(N));
    }
  }
  r.loss = total / static_cast<double>(N);
  return r;
}

/// Mean-over-batch squared L2 distance between predicted and target logits:
/// (1/T) sum_t ||g - z||^2, gradient (2/T)(g - z).
template <typename Scalar>
LossResult<Scalar> l2_logit_loss(const Tensor<Scalar>& pred, const Tensor<Scalar>& target) {
  if (pred.rank() != 2 || !pred.same_shape(target))
    throw ShapeError("l2_logit_loss expects matching (batch, classes) tensors, got " +
                     shape_str(pred.shape()) + " vs " + shape_str(target.shape()));
  const Index N = pred.dim(0);
  LossResult<Scalar> r{0.0, Tensor<Scalar>(pred.shape())};
  double total = 0.0;
  const double inv_n = 1.0 / static_cast<double>(N);
  for (Index i = 0; i < pred.size(); ++i) {
    const double d = static_cast<double>(pred[i]) - static_cast<double>(target[i]);
    total += d * d;
    r.grad[i] = static_cast<Scalar>(2.0 * d * inv_n);
  }
  r.loss = total * inv_n;
  return r;
}

/// Uniform Glorot initialization on +-scale * sqrt(6 / (fan_in + fan_out)),
/// filled in row-major order so a fixed stream gives bit-identical tensors.
template <typename Scalar>
Tensor<Scalar> glorot_init(Index fan_in, Index fan_out, double scale, Shape shape, RngStream& rng) {
  if (fan_in <= 0 || fan_out <= 0) throw ValueError("glorot_init fans must be positive");
  if (scale <= 0.0) throw ValueError("glorot_init scale must be positive");
  const double limit = scale * std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor<Scalar> t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = static_cast<Scalar>(rng.uniform(-limit, limit));
  return t;
}

}  // namespace mimicbench::ops
