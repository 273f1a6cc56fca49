// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mimicbench/errors.hpp"

namespace mimicbench::arch {

enum class LayerKind { kConv, kMaxPool, kFullyConnected, kLinearBottleneck, kOutput };

std::string kind_name(LayerKind kind);

/// One grammar node. A missing width marks the layer as unresolved: its
/// width is either solved against a parameter budget (the dependent slot) or
/// filled in from hyperparameter scalars before counting.
struct LayerNode {
  LayerKind kind = LayerKind::kConv;
  std::optional<int> width;  // filters / units; meaningless for kMaxPool
  int repeat = 1;
  int kernel = 3;  // kConv only
  int window = 2;  // kMaxPool only

  bool operator==(const LayerNode&) const = default;
};

struct InputShape {
  int channels = 3;
  int height = 32;
  int width = 32;
};

/// Parsed architecture. The trailing 10-way output layer is implicit in the
/// string form and explicit in the node list.
struct ArchSpec {
  std::vector<LayerNode> nodes;
  InputShape input;

  /// Grammar, tokens joined by '-':
  ///   <n>c, <n>c^<k>   convolution (width n, repeated k times)
  ///   c, c^<k>         convolution with unresolved width
  ///   mp               max-pooling
  ///   <n>fc, fc, ^k    fully-connected ReLU layer
  ///   <n>lfc, lfc, ^k  linear bottleneck layer
  /// A 10-way output layer is appended implicitly.
  static ArchSpec parse(std::string_view text);

  /// Canonical string form (round-trips through parse).
  std::string render() const;

  int unresolved_count() const;

  /// Copies with every conv kernel / pool window replaced; used by model
  /// families that share the grammar but differ in kernel or pooling size.
  ArchSpec with_conv_kernel(int kernel) const;
  ArchSpec with_pool_window(int window) const;

  bool operator==(const ArchSpec&) const = default;
};

/// Flattened per-layer view (repeats unrolled) with output shapes and the
/// exact trainable-parameter count of each layer.
struct LayerTrace {
  LayerKind kind;
  int width = 0;        // filters or units (10 for output)
  int kernel_or_window = 0;
  int out_channels = 0;  // 0 once flattened
  int out_height = 0;
  int out_width = 0;
  std::int64_t out_features = 0;  // flattened feature count
  std::int64_t params = 0;
};

std::vector<LayerTrace> trace(const ArchSpec& spec);

/// Exact count of weights and biases. Requires every width to be resolved.
std::int64_t count_params(const ArchSpec& spec);

/// Fills the single unresolved width with the largest integer >= 1 that
/// keeps count_params within the budget.
ArchSpec solve_dependent_width(const ArchSpec& tmpl, std::int64_t budget);

/// Affine width mapping, round-half-up: width = round(lo + scalar*(hi-lo)).
int width_from_scalar(double scalar, int lo, int hi);

std::vector<int> widths_from_scalars(std::span<const double> scalars,
                                     std::span<const std::pair<int, int>> bounds);

/// Parameter count of a plain MLP input -> w1 -> ... -> wL -> classes with
/// biases everywhere (all layers fully connected).
std::int64_t mlp_param_count(std::span<const int> widths, int input_dim, int classes);

/// Width allocation for non-convolutional students: normalizes the ratio
/// vector, scales it by the largest common factor that fits the budget, then
/// tops up the widest layer while room remains.
std::vector<int> widths_from_ratios(std::span<const double> ratios, std::int64_t budget,
                                    int input_dim = 3072, int classes = 10);

}  // namespace mimicbench::arch
