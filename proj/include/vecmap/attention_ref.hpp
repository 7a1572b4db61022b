// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "vecmap/attention.hpp"

namespace vecmap::ref {

// Serial reference kernels: straightforward loops, full score matrices, no
// shared code with the production path. Kept as the correctness baseline for
// tests and the comparison benchmark.

Mat attention_block(const Mat& q, const Mat& k, const Mat& v, double scale,
                    int heads);

QueryGrid vanilla_self_attention(const QueryGrid& g, const AttentionParams& p);
QueryGrid decoupled_row_pass(const QueryGrid& g, const AttentionParams& p);
QueryGrid decoupled_col_pass(const QueryGrid& g, const AttentionParams& p);
QueryGrid decoupled_self_attention(const QueryGrid& g, const AttentionParams& p);
QueryGrid criss_cross_attention(const QueryGrid& g, const AttentionParams& p);

QueryGrid run_attention(AttentionKernel kernel, const QueryGrid& g,
                        const AttentionParams& p);

}  // namespace vecmap::ref
