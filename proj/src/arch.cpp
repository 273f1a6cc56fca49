// Copyright 2026 The mimicbench Authors
// SPDX-License-Identifier: Apache-2.0

#include "mimicbench/arch.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace mimicbench::arch {

std::string kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kMaxPool: return "maxpool";
    case LayerKind::kFullyConnected: return "fc";
    case LayerKind::kLinearBottleneck: return "linear_bottleneck";
    case LayerKind::kOutput: return "output";
  }
  return "?";
}

namespace {

struct Token {
  std::string_view text;
  std::size_t position;
};

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> tokens;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('-', start);
    if (end == std::string_view::npos) end = text.size();
    tokens.push_back({text.substr(start, end - start), start});
    if (end == text.size()) break;
    start = end + 1;
  }
  return tokens;
}

LayerNode parse_token(const Token& tok) {
  std::string_view t = tok.text;
  if (t.empty()) throw ParseError("empty token", tok.position);
  if (t == "mp") return LayerNode{LayerKind::kMaxPool, std::nullopt, 1};

  std::size_t i = 0;
  std::optional<int> width;
  if (std::isdigit(static_cast<unsigned char>(t[0]))) {
    long w = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
      w = w * 10 + (t[i] - '0');
      if (w > std::numeric_limits<int>::max()) throw ParseError("width overflow", tok.position);
      ++i;
    }
    if (w == 0) throw ParseError("zero width", tok.position);
    width = static_cast<int>(w);
  }

  LayerKind kind;
  if (t.substr(i, 3) == "lfc") {
    kind = LayerKind::kLinearBottleneck;
    i += 3;
  } else if (t.substr(i, 2) == "fc") {
    kind = LayerKind::kFullyConnected;
    i += 2;
  } else if (i < t.size() && t[i] == 'c') {
    kind = LayerKind::kConv;
    i += 1;
  } else {
    throw ParseError("unknown token '" + std::string(t) + "'", tok.position);
  }

  int repeat = 1;
  if (i < t.size()) {
    if (t[i] != '^') throw ParseError("unknown token '" + std::string(t) + "'", tok.position);
    ++i;
    if (i >= t.size() || !std::isdigit(static_cast<unsigned char>(t[i])))
      throw ParseError("missing repeat count after '^'", tok.position + i);
    long r = 0;
    while (i < t.size() && std::isdigit(static_cast<unsigned char>(t[i]))) {
      r = r * 10 + (t[i] - '0');
      if (r > 1024) throw ParseError("repeat count too large", tok.position);
      ++i;
    }
    if (i != t.size()) throw ParseError("trailing characters in token", tok.position + i);
    if (r == 0) throw ParseError("repeat count must be >= 1", tok.position);
    repeat = static_cast<int>(r);
  }

  return LayerNode{kind, width, repeat};
}

}  // namespace

ArchSpec ArchSpec::parse(std::string_view text) {
  if (text.empty()) throw ParseError("empty architecture string", 0);
  ArchSpec spec;
  for (const Token& tok : tokenize(text)) spec.nodes.push_back(parse_token(tok));
  spec.nodes.push_back(LayerNode{LayerKind::kOutput, 10, 1});
  return spec;
}

std::string ArchSpec::render() const {
  std::string out;
  for (const LayerNode& node : nodes) {
    if (node.kind == LayerKind::kOutput) continue;
    if (!out.empty()) out += '-';
    if (node.kind == LayerKind::kMaxPool) {
      out += "mp";
      continue;
    }
    if (node.width) out += std::to_string(*node.width);
    switch (node.kind) {
      case LayerKind::kConv: out += 'c'; break;
      case LayerKind::kFullyConnected: out += "fc"; break;
      case LayerKind::kLinearBottleneck: out += "lfc"; break;
      default: break;
    }
    if (node.repeat > 1) out += '^' + std::to_string(node.repeat);
  }
  return out;
}

int ArchSpec::unresolved_count() const {
  int n = 0;
  for (const LayerNode& node : nodes)
    if (node.kind != LayerKind::kMaxPool && node.kind != LayerKind::kOutput && !node.width) ++n;
  return n;
}

ArchSpec ArchSpec::with_conv_kernel(int kernel) const {
  ArchSpec out = *this;
  for (LayerNode& node : out.nodes)
    if (node.kind == LayerKind::kConv) node.kernel = kernel;
  return out;
}

ArchSpec ArchSpec::with_pool_window(int window) const {
  ArchSpec out = *this;
  for (LayerNode& node : out.nodes)
    if (node.kind == LayerKind::kMaxPool) node.window = window;
  return out;
}

std::vector<LayerTrace> trace(const ArchSpec& spec) {
  std::vector<LayerTrace> traces;
  int channels = spec.input.channels;
  int height = spec.input.height;
  int width = spec.input.width;
  bool spatial = true;
  std::int64_t features = 0;

  for (const LayerNode& node : spec.nodes) {
    for (int r = 0; r < node.repeat; ++r) {
      LayerTrace t{};
      t.kind = node.kind;
      switch (node.kind) {
        case LayerKind::kConv: {
          if (!spatial)
            throw ValueError("convolution after a fully-connected layer in '" + spec.render() + "'");
          if (!node.width) throw ValueError("unresolved conv width in '" + spec.render() + "'");
          const int f = *node.width;
          const std::int64_t k2 = static_cast<std::int64_t>(node.kernel) * node.kernel;
          t.params = static_cast<std::int64_t>(f) * channels * k2 + f;
          channels = f;
          t.width = f;
          t.kernel_or_window = node.kernel;
          break;
        }
        case LayerKind::kMaxPool: {
          if (!spatial)
            throw ValueError("max-pool after a fully-connected layer in '" + spec.render() + "'");
          if (node.window > height || node.window > width)
            throw ValueError("pool window exceeds spatial size in '" + spec.render() + "'");
          height /= node.window;
          width /= node.window;
          t.kernel_or_window = node.window;
          break;
        }
        case LayerKind::kFullyConnected:
        case LayerKind::kLinearBottleneck:
        case LayerKind::kOutput: {
          const int units = node.kind == LayerKind::kOutput ? 10 : node.width.value_or(0);
          if (units <= 0) throw ValueError("unresolved layer width in '" + spec.render() + "'");
          if (spatial) {
            features = static_cast<std::int64_t>(channels) * height * width;
            spatial = false;
          }
          t.params = features * units + units;
          features = units;
          t.width = units;
          break;
        }
      }
      if (spatial) {
        t.out_channels = channels;
        t.out_height = height;
        t.out_width = width;
        t.out_features = static_cast<std::int64_t>(channels) * height * width;
      } else {
        t.out_features = features;
      }
      traces.push_back(t);
    }
  }
  return traces;
}

std::int64_t count_params(const ArchSpec& spec) {
  if (spec.unresolved_count() > 0)
    throw ValueError("count_params requires fully resolved widths in '" + spec.render() + "'");
  std::int64_t total = 0;
  for (const LayerTrace& t : trace(spec)) total += t.params;
  return total;
}

ArchSpec solve_dependent_width(const ArchSpec& tmpl, std::int64_t budget) {
  if (tmpl.unresolved_count() != 1)
    throw ValueError("solve_dependent_width needs exactly one unresolved width, found " +
                     std::to_string(tmpl.unresolved_count()) + " in '" + tmpl.render() + "'");
  if (budget <= 0) throw ValueError("parameter budget must be positive");

  ArchSpec solved = tmpl;
  LayerNode* slot = nullptr;
  for (LayerNode& node : solved.nodes)
    if (node.kind != LayerKind::kMaxPool && node.kind != LayerKind::kOutput && !node.width)
      slot = &node;

  auto params_at = [&](std::int64_t w) {
    slot->width = static_cast<int>(w);
    return count_params(solved);
  };

  if (params_at(1) > budget)
    throw ValueError("budget " + std::to_string(budget) + " too small for '" + tmpl.render() +
                     "': the smallest legal model has " + std::to_string(params_at(1)) +
                     " parameters");

  // count_params is monotone increasing in the width, so bracket then bisect.
  std::int64_t lo = 1, hi = 2;
  while (params_at(hi) <= budget) {
    lo = hi;
    hi *= 2;
    if (hi > (std::int64_t(1) << 32)) break;
  }
  while (lo + 1 < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (params_at(mid) <= budget)
      lo = mid;
    else
      hi = mid;
  }
  slot->width = static_cast<int>(lo);
  return solved;
}

int width_from_scalar(double scalar, int lo, int hi) {
  if (scalar < 0.0 || scalar > 1.0)
    throw ValueError("width scalar must lie in [0, 1], got " + std::to_string(scalar));
  if (lo > hi) throw ValueError("width bounds out of order");
  return static_cast<int>(std::floor(lo + scalar * (hi - lo) + 0.5));
}

std::vector<int> widths_from_scalars(std::span<const double> scalars,
                                     std::span<const std::pair<int, int>> bounds) {
  if (scalars.size() != bounds.size())
    throw ValueError("one width scalar per bound pair required");
  std::vector<int> widths(scalars.size());
  for (std::size_t i = 0; i < scalars.size(); ++i)
    widths[i] = width_from_scalar(scalars[i], bounds[i].first, bounds[i].second);
  return widths;
}

std::int64_t mlp_param_count(std::span<const int> widths, int input_dim, int classes) {
  std::int64_t total = 0;
  std::int64_t in = input_dim;
  for (int w : widths) {
    total += in * w + w;
    in = w;
  }
  total += in * classes + classes;
  return total;
}

std::vector<int> widths_from_ratios(std::span<const double> ratios, std::int64_t budget,
                                    int input_dim, int classes) {
  if (ratios.size() < 2) throw ValueError("ratio allocation needs at least two layers");
  double sum = 0.0;
  for (double r : ratios) {
    if (r < 0.0 || r > 1.0) throw ValueError("layer ratios must lie in [0, 1]");
    sum += r;
  }
  if (sum <= 0.0) throw ValueError("at least one layer ratio must be positive");

  std::vector<double> shares(ratios.begin(), ratios.end());
  for (double& s : shares) s /= sum;

  auto widths_at = [&](std::int64_t scale) {
    std::vector<int> w(shares.size());
    for (std::size_t i = 0; i < shares.size(); ++i)
      w[i] = std::max(1, static_cast<int>(std::floor(shares[i] * static_cast<double>(scale) + 0.5)));
    return w;
  };

  if (mlp_param_count(widths_at(1), input_dim, classes) > budget)
    throw ValueError("budget " + std::to_string(budget) + " too small for a " +
                     std::to_string(ratios.size()) + "-layer network");

  // The scale is measured in total hidden units; the count is monotone in it.
  std::int64_t lo = 1, hi = 2;
  while (mlp_param_count(widths_at(hi), input_dim, classes) <= budget) {
    lo = hi;
    hi *= 2;
    if (hi > (std::int64_t(1) << 40)) break;
  }
  while (lo + 1 < hi) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    if (mlp_param_count(widths_at(mid), input_dim, classes) <= budget)
      lo = mid;
    else
      hi = mid;
  }

  std::vector<int> widths = widths_at(lo);
  // Rounding can leave slack worth a few units; spend it on the widest layer.
  for (;;) {
    const std::size_t big = static_cast<std::size_t>(
        std::max_element(widths.begin(), widths.end()) - widths.begin());
    widths[big] += 1;
    if (mlp_param_count(widths, input_dim, classes) > budget) {
      widths[big] -= 1;
      break;
    }
  }
  return widths;
}

}  // namespace mimicbench::arch
