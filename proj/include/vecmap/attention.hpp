// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "vecmap/mat.hpp"

namespace vecmap {

// N instance queries x N_v point queries x embedding width d, doubles.
struct QueryGrid {
  int n = 0;
  int nv = 0;
  int d = 0;
  std::vector<double> data;

  QueryGrid() = default;
  QueryGrid(int n_, int nv_, int d_)
      : n(n_), nv(nv_), d(d_),
        data(static_cast<size_t>(n_) * nv_ * d_, 0.0) {}

  int tokens() const { return n * nv; }
  double& at(int i, int j, int k) {
    return data[(static_cast<size_t>(i) * nv + j) * d + k];
  }
  double at(int i, int j, int k) const {
    return data[(static_cast<size_t>(i) * nv + j) * d + k];
  }

  static QueryGrid random(int n, int nv, int d, std::uint64_t seed);
};

// Scaled dot-product projections. scale defaults to 1/sqrt(d/heads).
struct AttentionParams {
  Mat wq, wk, wv;  // d x d
  double scale = 0.0;
  int heads = 1;

  static AttentionParams identity(int d, int heads = 1);
  static AttentionParams random(int d, std::uint64_t seed, int heads = 1);
};

// Multiply-accumulate tally. Interaction counts the score/aggregation
// products (the term the complexity claim is about); projection counts the
// per-token d x d input projections and is reported separately.
struct MacCounter {
  std::uint64_t interaction = 0;
  std::uint64_t projection = 0;

  std::uint64_t total() const { return interaction + projection; }
  void reset() { interaction = projection = 0; }
};

enum class AttentionKernel { Vanilla, Decoupled, CrissCross };

const char* kernel_name(AttentionKernel k);

// Row-stabilized softmax: each output row is non-negative and sums to 1.
Mat softmax_rows(const Mat& m);

// softmax_rows(q k^T scale) v over already-projected inputs, split into
// `heads` independent column slices. Adds 2 * Lq * Lk * d interaction MACs.
Mat attention_block(const Mat& q, const Mat& k, const Mat& v, double scale,
                    int heads, MacCounter& mac);

// x * w with projection MAC accounting.
Mat project(const Mat& x, const Mat& w, MacCounter& mac);

// Full pairwise attention over the flattened (N * N_v)-token sequence.
QueryGrid vanilla_self_attention(const QueryGrid& g, const AttentionParams& p,
                                 MacCounter& mac);

// Horizontal pass: attention within each instance, across its point queries.
QueryGrid decoupled_row_pass(const QueryGrid& g, const AttentionParams& p,
                             MacCounter& mac);
// Vertical pass: attention across instances at a fixed point index.
QueryGrid decoupled_col_pass(const QueryGrid& g, const AttentionParams& p,
                             MacCounter& mac);

// Row pass followed by a column pass on its output, so the vertical pass
// integrates horizontally mixed information.
QueryGrid decoupled_self_attention(const QueryGrid& g, const AttentionParams& p,
                                   MacCounter& mac);

// Each token attends over the union of its row and column (N + N_v - 1
// keys) in one softmax; applied twice so information reaches the full grid.
QueryGrid criss_cross_attention(const QueryGrid& g, const AttentionParams& p,
                                MacCounter& mac);

QueryGrid run_attention(AttentionKernel kernel, const QueryGrid& g,
                        const AttentionParams& p, MacCounter& mac);

// Analytic d(loss)/d(input grid) for the decoupled kernel, given
// d(loss)/d(output grid). Recomputes the forward internally.
QueryGrid decoupled_self_attention_backward(const QueryGrid& input,
                                            const AttentionParams& p,
                                            const QueryGrid& grad_output);

struct ScalingPoint {
  int n = 0;
  int nv = 0;
  std::uint64_t interaction_macs = 0;
  std::uint64_t projection_macs = 0;
  double wall_ms = 0.0;
};

struct ScalingFit {
  std::vector<ScalingPoint> points;
  double exponent = 0.0;  // least-squares slope of log(interaction) vs log(L)
};

// Runs the kernel over square grids and fits the MAC growth exponent.
// Requires >= 3 sizes with n == nv spanning at least a decade of L = n * nv.
ScalingFit measure_scaling(AttentionKernel kernel,
                           const std::vector<std::pair<int, int>>& sizes, int d);

}  // namespace vecmap
