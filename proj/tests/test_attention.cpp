// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "vecmap/attention.hpp"
#include "vecmap/attention_ref.hpp"

using namespace vecmap;

namespace {

double max_abs_diff(const QueryGrid& a, const QueryGrid& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  }
  return worst;
}

}  // namespace

TEST_CASE("softmax_rows examples") {
  Mat m(1, 2);
  m.at(0, 0) = 0.0;
  m.at(0, 1) = 0.0;
  Mat s = softmax_rows(m);
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  m.at(0, 0) = 1000.0;
  m.at(0, 1) = 1000.0;
  s = softmax_rows(m);
  CHECK(s.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(s.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

  m.at(0, 0) = 0.0;
  m.at(0, 1) = std::log(3.0);
  s = softmax_rows(m);
  CHECK(s.at(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(s.at(0, 1) == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("softmax rows always sum to one") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> val(-50.0, 50.0);
  Mat m(6, 9);
  for (double& v : m.data) v = val(rng);
  const Mat s = softmax_rows(m);
  for (int i = 0; i < s.rows; ++i) {
    double sum = 0.0;
    for (int j = 0; j < s.cols; ++j) {
      CHECK(s.at(i, j) >= 0.0);
      sum += s.at(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("attention block: single key returns its value") {
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  Mat q(1, 4), k(1, 4), v(1, 4);
  for (double& x : q.data) x = val(rng);
  for (double& x : k.data) x = val(rng);
  for (double& x : v.data) x = val(rng);
  MacCounter mac;
  const Mat out = attention_block(q, k, v, 0.5, 1, mac);
  for (int c = 0; c < 4; ++c) {
    CHECK(out.at(0, c) == doctest::Approx(v.at(0, c)).epsilon(1e-12));
  }
}

TEST_CASE("attention block: identical keys average the values") {
  Mat q(2, 3), k(4, 3), v(4, 3);
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  for (double& x : q.data) x = val(rng);
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 3; ++c) {
      k.at(r, c) = c * 0.1;  // all key rows identical
      v.at(r, c) = val(rng);
    }
  }
  MacCounter mac;
  const Mat out = attention_block(q, k, v, 1.0, 1, mac);
  for (int t = 0; t < 2; ++t) {
    for (int c = 0; c < 3; ++c) {
      const double mean =
          (v.at(0, c) + v.at(1, c) + v.at(2, c) + v.at(3, c)) / 4.0;
      CHECK(out.at(t, c) == doctest::Approx(mean).epsilon(1e-12));
    }
  }
}

TEST_CASE("attention block matches the naive reference") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> val(-2.0, 2.0);
  Mat q(3, 2), k(3, 2), v(3, 2);
  for (double& x : q.data) x = val(rng);
  for (double& x : k.data) x = val(rng);
  for (double& x : v.data) x = val(rng);
  MacCounter mac;
  const Mat out = attention_block(q, k, v, 1.0 / std::sqrt(2.0), 1, mac);
  const Mat expected = ref::attention_block(q, k, v, 1.0 / std::sqrt(2.0), 1);
  for (size_t i = 0; i < out.data.size(); ++i) {
    CHECK(out.data[i] == doctest::Approx(expected.data[i]).epsilon(1e-12));
  }
}

TEST_CASE("vanilla: 1x1 grid returns the projected value of the token") {
  const QueryGrid g = QueryGrid::random(1, 1, 6, 41);
  const AttentionParams p = AttentionParams::random(6, 42);
  MacCounter mac;
  const QueryGrid out = vanilla_self_attention(g, p, mac);
  for (int c = 0; c < 6; ++c) {
    double proj = 0.0;
    for (int k = 0; k < 6; ++k) proj += g.at(0, 0, k) * p.wv.at(k, c);
    CHECK(out.at(0, 0, c) == doctest::Approx(proj).epsilon(1e-12));
  }
}

TEST_CASE("identical tokens give identical outputs in every kernel") {
  const int n = 4, nv = 3, d = 5;
  QueryGrid g(n, nv, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < nv; ++j) {
      for (int c = 0; c < d; ++c) g.at(i, j, c) = 0.1 * c - 0.2;
    }
  }
  const AttentionParams p = AttentionParams::random(d, 43);
  for (AttentionKernel kernel : {AttentionKernel::Vanilla,
                                 AttentionKernel::Decoupled,
                                 AttentionKernel::CrissCross}) {
    MacCounter mac;
    const QueryGrid out = run_attention(kernel, g, p, mac);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < nv; ++j) {
        for (int c = 0; c < d; ++c) {
          CHECK(out.at(i, j, c) == doctest::Approx(out.at(0, 0, c)).epsilon(1e-10));
        }
      }
    }
  }
}

TEST_CASE("kernels match their naive references on random grids") {
  std::mt19937_64 rng(35);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_int_distribution<int> width(1, 8);
  for (int seed = 0; seed < 25; ++seed) {
    const int n = dim(rng), nv = dim(rng), d = width(rng);
    const QueryGrid g = QueryGrid::random(n, nv, d, 1000 + seed);
    const AttentionParams p = AttentionParams::random(d, 2000 + seed);
    for (AttentionKernel kernel : {AttentionKernel::Vanilla,
                                   AttentionKernel::Decoupled,
                                   AttentionKernel::CrissCross}) {
      MacCounter mac;
      const QueryGrid out = run_attention(kernel, g, p, mac);
      const QueryGrid expected = ref::run_attention(kernel, g, p);
      CAPTURE(kernel_name(kernel));
      CAPTURE(n);
      CAPTURE(nv);
      CAPTURE(d);
      CHECK(max_abs_diff(out, expected) < 1e-10);
    }
  }
}

TEST_CASE("multi-head kernels match the multi-head reference") {
  const QueryGrid g = QueryGrid::random(3, 4, 8, 77);
  const AttentionParams p = AttentionParams::random(8, 78, 2);
  for (AttentionKernel kernel : {AttentionKernel::Vanilla,
                                 AttentionKernel::Decoupled,
                                 AttentionKernel::CrissCross}) {
    MacCounter mac;
    CHECK(max_abs_diff(run_attention(kernel, g, p, mac),
                       ref::run_attention(kernel, g, p)) < 1e-10);
  }
}

TEST_CASE("single-row grid: criss-cross equals two row-only passes") {
  const QueryGrid g = QueryGrid::random(1, 5, 4, 51);
  const AttentionParams p = AttentionParams::random(4, 52);
  MacCounter mac;
  const QueryGrid out = criss_cross_attention(g, p, mac);
  const QueryGrid twice = ref::decoupled_row_pass(ref::decoupled_row_pass(g, p), p);
  CHECK(max_abs_diff(out, twice) < 1e-10);
}

TEST_CASE("vanilla attention is token-permutation equivariant") {
  const int n = 3, nv = 4, d = 5;
  const QueryGrid g = QueryGrid::random(n, nv, d, 61);
  const AttentionParams p = AttentionParams::random(d, 62);
  MacCounter mac;
  const QueryGrid base = vanilla_self_attention(g, p, mac);

  std::vector<int> perm(n * nv);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(63);
  std::shuffle(perm.begin(), perm.end(), rng);

  QueryGrid shuffled(n, nv, d);
  for (int t = 0; t < n * nv; ++t) {
    for (int c = 0; c < d; ++c) {
      shuffled.data[static_cast<size_t>(t) * d + c] =
          g.data[static_cast<size_t>(perm[t]) * d + c];
    }
  }
  const QueryGrid out = vanilla_self_attention(shuffled, p, mac);
  for (int t = 0; t < n * nv; ++t) {
    for (int c = 0; c < d; ++c) {
      CHECK(out.data[static_cast<size_t>(t) * d + c] ==
            doctest::Approx(base.data[static_cast<size_t>(perm[t]) * d + c])
                .epsilon(1e-12));
    }
  }
}

TEST_CASE("row pass: perturbing one row only changes that row") {
  const QueryGrid g = QueryGrid::random(5, 4, 3, 71);
  const AttentionParams p = AttentionParams::random(3, 72);
  MacCounter mac;
  const QueryGrid base = decoupled_row_pass(g, p, mac);
  QueryGrid poked = g;
  poked.at(2, 1, 0) += 0.5;
  const QueryGrid moved = decoupled_row_pass(poked, p, mac);
  for (int i = 0; i < g.n; ++i) {
    double diff = 0.0;
    for (int j = 0; j < g.nv; ++j) {
      for (int c = 0; c < g.d; ++c) {
        diff = std::max(diff, std::abs(moved.at(i, j, c) - base.at(i, j, c)));
      }
    }
    if (i == 2) {
      CHECK(diff > 0.0);
    } else {
      CHECK(diff == 0.0);
    }
  }
}

TEST_CASE("MAC counts follow the closed forms and are deterministic") {
  const int n = 7, nv = 5, d = 6;
  const std::uint64_t l = static_cast<std::uint64_t>(n) * nv;
  const QueryGrid g = QueryGrid::random(n, nv, d, 81);
  const AttentionParams p = AttentionParams::random(d, 82);

  MacCounter vanilla1, vanilla2;
  (void)vanilla_self_attention(g, p, vanilla1);
  (void)vanilla_self_attention(g, p, vanilla2);
  CHECK(vanilla1.interaction == 2 * l * l * d);
  CHECK(vanilla1.projection == 3 * l * d * d);
  CHECK(vanilla1.interaction == vanilla2.interaction);
  CHECK(vanilla1.projection == vanilla2.projection);

  MacCounter dec;
  (void)decoupled_self_attention(g, p, dec);
  CHECK(dec.interaction ==
        2ull * d * n * nv * nv + 2ull * d * nv * n * n);
  CHECK(dec.projection == 6 * l * d * d);

  MacCounter cc;
  (void)criss_cross_attention(g, p, cc);
  CHECK(cc.interaction == 2ull * 2 * l * (n + nv - 1) * d);
  CHECK(cc.projection == 6 * l * d * d);

  // Head count redistributes but does not change the totals.
  const AttentionParams p2 = AttentionParams::random(d, 83, 3);
  MacCounter heads;
  (void)vanilla_self_attention(g, p2, heads);
  CHECK(heads.interaction == vanilla1.interaction);
}

TEST_CASE("measure_scaling recovers the expected exponents") {
  const std::vector<std::pair<int, int>> sizes{{10, 10}, {20, 20}, {40, 40}};
  const ScalingFit vanilla = measure_scaling(AttentionKernel::Vanilla, sizes, 8);
  CHECK(vanilla.exponent == doctest::Approx(2.0).epsilon(0.05));

  const ScalingFit dec = measure_scaling(AttentionKernel::Decoupled, sizes, 8);
  CHECK(dec.exponent == doctest::Approx(1.5).epsilon(0.05));

  const ScalingFit cc = measure_scaling(AttentionKernel::CrissCross, sizes, 8);
  CHECK(cc.exponent > 1.4);
  CHECK(cc.exponent < 1.6);
}

TEST_CASE("measure_scaling rejects bad size lists") {
  CHECK_THROWS_AS(measure_scaling(AttentionKernel::Vanilla, {{10, 10}, {20, 20}}, 4),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      measure_scaling(AttentionKernel::Vanilla, {{10, 10}, {20, 20}, {10, 20}}, 4),
      std::invalid_argument);
  CHECK_THROWS_AS(
      measure_scaling(AttentionKernel::Vanilla, {{10, 10}, {12, 12}, {14, 14}}, 4),
      std::invalid_argument);
}

TEST_CASE("decoupled backward matches finite differences") {
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  const double h = 1e-6;
  for (int heads : {1, 2}) {
    const int n = 3, nv = 4, d = 4;
    const QueryGrid g = QueryGrid::random(n, nv, d, 92 + heads);
    const AttentionParams p = AttentionParams::random(d, 93 + heads, heads);

    // Scalar functional: weighted sum of all outputs.
    QueryGrid weights(n, nv, d);
    for (double& w : weights.data) w = val(rng);
    auto functional = [&](const QueryGrid& input) {
      MacCounter mac;
      const QueryGrid out = decoupled_self_attention(input, p, mac);
      double sum = 0.0;
      for (size_t i = 0; i < out.data.size(); ++i) {
        sum += weights.data[i] * out.data[i];
      }
      return sum;
    };

    const QueryGrid grad = decoupled_self_attention_backward(g, p, weights);
    double max_rel = 0.0;
    for (size_t i = 0; i < g.data.size(); ++i) {
      QueryGrid up = g, down = g;
      up.data[i] += h;
      down.data[i] -= h;
      const double fd = (functional(up) - functional(down)) / (2 * h);
      const double rel = std::abs(grad.data[i] - fd) /
                         std::max({std::abs(grad.data[i]), std::abs(fd), 1e-8});
      max_rel = std::max(max_rel, rel);
    }
    CAPTURE(heads);
    CHECK(max_rel < 1e-5);
  }
}

TEST_CASE("grid and parameter validation") {
  QueryGrid bad(2, 2, 2);
  bad.data[0] = std::numeric_limits<double>::quiet_NaN();
  const AttentionParams p = AttentionParams::random(2, 5);
  MacCounter mac;
  CHECK_THROWS_AS(vanilla_self_attention(bad, p, mac), std::invalid_argument);

  const QueryGrid g = QueryGrid::random(2, 2, 3, 6);
  const AttentionParams mismatched = AttentionParams::random(4, 7);
  CHECK_THROWS_AS(vanilla_self_attention(g, mismatched, mac), std::invalid_argument);

  AttentionParams bad_heads = AttentionParams::random(3, 8);
  bad_heads.heads = 2;  // does not divide d = 3
  CHECK_THROWS_AS(vanilla_self_attention(g, bad_heads, mac), std::invalid_argument);
}
