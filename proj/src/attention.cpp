// SPDX-License-Identifier: Apache-2.0
#include "vecmap/attention.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>

namespace vecmap {

namespace {

void validate_grid(const QueryGrid& g) {
  if (g.n < 1 || g.nv < 1 || g.d < 1) {
    throw std::invalid_argument("QueryGrid: n, nv, d must all be >= 1");
  }
  if (g.data.size() != static_cast<size_t>(g.n) * g.nv * g.d) {
    throw std::invalid_argument("QueryGrid: data size does not match shape");
  }
  for (double v : g.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("QueryGrid: entries must be finite");
    }
  }
}

void validate_params(const AttentionParams& p, int d) {
  auto square = [d](const Mat& w) { return w.rows == d && w.cols == d; };
  if (!square(p.wq) || !square(p.wk) || !square(p.wv)) {
    throw std::invalid_argument("AttentionParams: projections must be d x d");
  }
  if (p.heads < 1 || d % p.heads != 0) {
    throw std::invalid_argument("AttentionParams: heads must divide d");
  }
  if (!(p.scale > 0.0)) {
    throw std::invalid_argument("AttentionParams: scale must be positive");
  }
}

// Attention over one already-projected sequence: q is tq x d, k/v are tk x d,
// out is tq x d. Serial per query token, so results do not depend on the
// thread schedule of any enclosing loop.
void attend_sequence(const double* q, int tq, const double* k, const double* v,
                     int tk, int d, double scale, int heads, double* out,
                     MacCounter& mac) {
  const int dh = d / heads;
  std::vector<double> scores(tk);
  for (int t = 0; t < tq; ++t) {
    for (int h = 0; h < heads; ++h) {
      const int base = h * dh;
      const double* qt = q + static_cast<size_t>(t) * d + base;
      for (int s = 0; s < tk; ++s) {
        const double* ks = k + static_cast<size_t>(s) * d + base;
        double dot = 0.0;
        for (int c = 0; c < dh; ++c) dot += qt[c] * ks[c];
        scores[s] = dot * scale;
      }
      double mx = scores[0];
      for (int s = 1; s < tk; ++s) mx = std::max(mx, scores[s]);
      double denom = 0.0;
      for (int s = 0; s < tk; ++s) {
        scores[s] = std::exp(scores[s] - mx);
        denom += scores[s];
      }
      double* ot = out + static_cast<size_t>(t) * d + base;
      std::fill(ot, ot + dh, 0.0);
      for (int s = 0; s < tk; ++s) {
        const double w = scores[s] / denom;
        const double* vs = v + static_cast<size_t>(s) * d + base;
        for (int c = 0; c < dh; ++c) ot[c] += w * vs[c];
      }
    }
  }
  mac.interaction += 2ull * tq * tk * d;
}

Mat grid_to_mat(const QueryGrid& g) {
  Mat x(g.tokens(), g.d);
  std::memcpy(x.data.data(), g.data.data(), g.data.size() * sizeof(double));
  return x;
}

QueryGrid mat_to_grid(const Mat& x, int n, int nv) {
  QueryGrid g(n, nv, x.cols);
  std::memcpy(g.data.data(), x.data.data(), x.data.size() * sizeof(double));
  return g;
}

Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int k = 0; k < a.cols; ++k) {
      const double aik = a.at(i, k);
      for (int j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
    }
  }
  return c;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

}  // namespace

QueryGrid QueryGrid::random(int n, int nv, int d, std::uint64_t seed) {
  QueryGrid g(n, nv, d);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (double& v : g.data) v = dist(rng);
  return g;
}

AttentionParams AttentionParams::identity(int d, int heads) {
  AttentionParams p;
  p.wq = Mat(d, d);
  p.wk = Mat(d, d);
  p.wv = Mat(d, d);
  for (int i = 0; i < d; ++i) {
    p.wq.at(i, i) = 1.0;
    p.wk.at(i, i) = 1.0;
    p.wv.at(i, i) = 1.0;
  }
  p.heads = heads;
  p.scale = 1.0 / std::sqrt(static_cast<double>(d) / heads);
  return p;
}

AttentionParams AttentionParams::random(int d, std::uint64_t seed, int heads) {
  AttentionParams p = identity(d, heads);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (double& v : p.wq.data) v = dist(rng);
  for (double& v : p.wk.data) v = dist(rng);
  for (double& v : p.wv.data) v = dist(rng);
  return p;
}

const char* kernel_name(AttentionKernel k) {
  switch (k) {
    case AttentionKernel::Vanilla: return "vanilla";
    case AttentionKernel::Decoupled: return "decoupled";
    case AttentionKernel::CrissCross: return "criss_cross";
  }
  return "unknown";
}

Mat softmax_rows(const Mat& m) {
  for (double v : m.data) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("softmax_rows: entries must be finite");
    }
  }
  Mat out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    double mx = m.at(i, 0);
    for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m.at(i, j));
    double denom = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      out.at(i, j) = std::exp(m.at(i, j) - mx);
      denom += out.at(i, j);
    }
    for (int j = 0; j < m.cols; ++j) out.at(i, j) /= denom;
  }
  return out;
}

Mat project(const Mat& x, const Mat& w, MacCounter& mac) {
  if (x.cols != w.rows || w.rows != w.cols) {
    throw std::invalid_argument("project: weight must be square and match width");
  }
  Mat out(x.rows, x.cols);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < x.rows; ++i) {
    for (int k = 0; k < x.cols; ++k) {
      const double xik = x.at(i, k);
      for (int j = 0; j < w.cols; ++j) out.at(i, j) += xik * w.at(k, j);
    }
  }
  mac.projection += 1ull * x.rows * w.rows * w.cols;
  return out;
}

Mat attention_block(const Mat& q, const Mat& k, const Mat& v, double scale,
                    int heads, MacCounter& mac) {
  if (q.cols != k.cols || k.cols != v.cols || k.rows != v.rows) {
    throw std::invalid_argument("attention_block: shape mismatch");
  }
  if (heads < 1 || q.cols % heads != 0) {
    throw std::invalid_argument("attention_block: heads must divide width");
  }
  Mat out(q.rows, q.cols);
  std::uint64_t inter = 0;
#pragma omp parallel for reduction(+ : inter) schedule(static)
  for (int t = 0; t < q.rows; ++t) {
    MacCounter local;
    attend_sequence(q.row(t), 1, k.data.data(), v.data.data(), k.rows, q.cols,
                    scale, heads, out.row(t), local);
    inter += local.interaction;
  }
  mac.interaction += inter;
  return out;
}

QueryGrid vanilla_self_attention(const QueryGrid& g, const AttentionParams& p,
                                 MacCounter& mac) {
  validate_grid(g);
  validate_params(p, g.d);
  const Mat x = grid_to_mat(g);
  const Mat q = project(x, p.wq, mac);
  const Mat k = project(x, p.wk, mac);
  const Mat v = project(x, p.wv, mac);
  const Mat out = attention_block(q, k, v, p.scale, p.heads, mac);
  return mat_to_grid(out, g.n, g.nv);
}

QueryGrid decoupled_row_pass(const QueryGrid& g, const AttentionParams& p,
                             MacCounter& mac) {
  validate_grid(g);
  validate_params(p, g.d);
  const Mat x = grid_to_mat(g);
  const Mat q = project(x, p.wq, mac);
  const Mat k = project(x, p.wk, mac);
  const Mat v = project(x, p.wv, mac);
  QueryGrid out(g.n, g.nv, g.d);
  std::uint64_t inter = 0;
  // Row token blocks are contiguous in the flattened layout.
#pragma omp parallel for reduction(+ : inter) schedule(static)
  for (int i = 0; i < g.n; ++i) {
    MacCounter local;
    const size_t offset = static_cast<size_t>(i) * g.nv * g.d;
    attend_sequence(q.data.data() + offset, g.nv, k.data.data() + offset,
                    v.data.data() + offset, g.nv, g.d, p.scale, p.heads,
                    out.data.data() + offset, local);
    inter += local.interaction;
  }
  mac.interaction += inter;
  return out;
}

QueryGrid decoupled_col_pass(const QueryGrid& g, const AttentionParams& p,
                             MacCounter& mac) {
  validate_grid(g);
  validate_params(p, g.d);
  const Mat x = grid_to_mat(g);
  const Mat q = project(x, p.wq, mac);
  const Mat k = project(x, p.wk, mac);
  const Mat v = project(x, p.wv, mac);
  QueryGrid out(g.n, g.nv, g.d);
  std::uint64_t inter = 0;
#pragma omp parallel for reduction(+ : inter) schedule(static)
  for (int j = 0; j < g.nv; ++j) {
    MacCounter local;
    Mat qc(g.n, g.d), kc(g.n, g.d), vc(g.n, g.d), oc(g.n, g.d);
    for (int i = 0; i < g.n; ++i) {
      const size_t offset = (static_cast<size_t>(i) * g.nv + j) * g.d;
      std::memcpy(qc.row(i), q.data.data() + offset, g.d * sizeof(double));
      std::memcpy(kc.row(i), k.data.data() + offset, g.d * sizeof(double));
      std::memcpy(vc.row(i), v.data.data() + offset, g.d * sizeof(double));
    }
    attend_sequence(qc.data.data(), g.n, kc.data.data(), vc.data.data(), g.n,
                    g.d, p.scale, p.heads, oc.data.data(), local);
    for (int i = 0; i < g.n; ++i) {
      const size_t offset = (static_cast<size_t>(i) * g.nv + j) * g.d;
      std::memcpy(out.data.data() + offset, oc.row(i), g.d * sizeof(double));
    }
    inter += local.interaction;
  }
  mac.interaction += inter;
  return out;
}

QueryGrid decoupled_self_attention(const QueryGrid& g, const AttentionParams& p,
                                   MacCounter& mac) {
  const QueryGrid horizontal = decoupled_row_pass(g, p, mac);
  return decoupled_col_pass(horizontal, p, mac);
}

namespace {

QueryGrid criss_cross_pass(const QueryGrid& g, const AttentionParams& p,
                           MacCounter& mac) {
  const Mat x = grid_to_mat(g);
  const Mat q = project(x, p.wq, mac);
  const Mat k = project(x, p.wk, mac);
  const Mat v = project(x, p.wv, mac);
  QueryGrid out(g.n, g.nv, g.d);
  const int nk = g.n + g.nv - 1;
  std::uint64_t inter = 0;
#pragma omp parallel for collapse(2) reduction(+ : inter) schedule(static)
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.nv; ++j) {
      MacCounter local;
      // Key set: the token's full row, then its column minus the duplicate.
      std::vector<double> keys(static_cast<size_t>(nk) * g.d);
      std::vector<double> vals(static_cast<size_t>(nk) * g.d);
      int slot = 0;
      for (int j2 = 0; j2 < g.nv; ++j2, ++slot) {
        const size_t src = (static_cast<size_t>(i) * g.nv + j2) * g.d;
        std::memcpy(&keys[static_cast<size_t>(slot) * g.d], k.data.data() + src,
                    g.d * sizeof(double));
        std::memcpy(&vals[static_cast<size_t>(slot) * g.d], v.data.data() + src,
                    g.d * sizeof(double));
      }
      for (int i2 = 0; i2 < g.n; ++i2) {
        if (i2 == i) continue;
        const size_t src = (static_cast<size_t>(i2) * g.nv + j) * g.d;
        std::memcpy(&keys[static_cast<size_t>(slot) * g.d], k.data.data() + src,
                    g.d * sizeof(double));
        std::memcpy(&vals[static_cast<size_t>(slot) * g.d], v.data.data() + src,
                    g.d * sizeof(double));
        ++slot;
      }
      const size_t offset = (static_cast<size_t>(i) * g.nv + j) * g.d;
      attend_sequence(q.data.data() + offset, 1, keys.data(), vals.data(), nk,
                      g.d, p.scale, p.heads, out.data.data() + offset, local);
      inter += local.interaction;
    }
  }
  mac.interaction += inter;
  return out;
}

}  // namespace

QueryGrid criss_cross_attention(const QueryGrid& g, const AttentionParams& p,
                                MacCounter& mac) {
  validate_grid(g);
  validate_params(p, g.d);
  // Two recurrent passes cover the full grid.
  const QueryGrid first = criss_cross_pass(g, p, mac);
  return criss_cross_pass(first, p, mac);
}

QueryGrid run_attention(AttentionKernel kernel, const QueryGrid& g,
                        const AttentionParams& p, MacCounter& mac) {
  switch (kernel) {
    case AttentionKernel::Vanilla: return vanilla_self_attention(g, p, mac);
    case AttentionKernel::Decoupled: return decoupled_self_attention(g, p, mac);
    case AttentionKernel::CrissCross: return criss_cross_attention(g, p, mac);
  }
  throw std::invalid_argument("run_attention: unknown kernel");
}

namespace {

// Backward through one projected-attention block over a full sequence.
// x: T x d pre-projection tokens; dout: T x d. Returns dx.
Mat attend_sequence_backward(const Mat& x, const AttentionParams& p,
                             const Mat& dout) {
  const int t = x.rows;
  const int d = x.cols;
  const int dh = d / p.heads;
  const Mat q = matmul(x, p.wq);
  const Mat k = matmul(x, p.wk);
  const Mat v = matmul(x, p.wv);

  Mat dq(t, d), dk(t, d), dv(t, d);
  for (int h = 0; h < p.heads; ++h) {
    const int base = h * dh;
    // Scores and attention weights for this head.
    Mat scores(t, t);
    for (int a = 0; a < t; ++a) {
      for (int b = 0; b < t; ++b) {
        double dot = 0.0;
        for (int c = 0; c < dh; ++c) dot += q.at(a, base + c) * k.at(b, base + c);
        scores.at(a, b) = dot * p.scale;
      }
    }
    const Mat attn = softmax_rows(scores);

    Mat da(t, t);
    for (int a = 0; a < t; ++a) {
      for (int b = 0; b < t; ++b) {
        double dot = 0.0;
        for (int c = 0; c < dh; ++c) {
          dot += dout.at(a, base + c) * v.at(b, base + c);
        }
        da.at(a, b) = dot;
      }
    }
    // dv_h = attn^T dout_h
    for (int b = 0; b < t; ++b) {
      for (int c = 0; c < dh; ++c) {
        double sum = 0.0;
        for (int a = 0; a < t; ++a) sum += attn.at(a, b) * dout.at(a, base + c);
        dv.at(b, base + c) = sum;
      }
    }
    // softmax backward: ds = attn * (da - rowsum(da * attn))
    Mat ds(t, t);
    for (int a = 0; a < t; ++a) {
      double rowdot = 0.0;
      for (int b = 0; b < t; ++b) rowdot += da.at(a, b) * attn.at(a, b);
      for (int b = 0; b < t; ++b) {
        ds.at(a, b) = attn.at(a, b) * (da.at(a, b) - rowdot);
      }
    }
    // dq_h = scale * ds k_h ; dk_h = scale * ds^T q_h
    for (int a = 0; a < t; ++a) {
      for (int c = 0; c < dh; ++c) {
        double sum = 0.0;
        for (int b = 0; b < t; ++b) sum += ds.at(a, b) * k.at(b, base + c);
        dq.at(a, base + c) = p.scale * sum;
      }
    }
    for (int b = 0; b < t; ++b) {
      for (int c = 0; c < dh; ++c) {
        double sum = 0.0;
        for (int a = 0; a < t; ++a) sum += ds.at(a, b) * q.at(a, base + c);
        dk.at(b, base + c) = p.scale * sum;
      }
    }
  }

  const Mat dx_q = matmul(dq, transpose(p.wq));
  const Mat dx_k = matmul(dk, transpose(p.wk));
  const Mat dx_v = matmul(dv, transpose(p.wv));
  Mat dx(t, d);
  for (size_t idx = 0; idx < dx.data.size(); ++idx) {
    dx.data[idx] = dx_q.data[idx] + dx_k.data[idx] + dx_v.data[idx];
  }
  return dx;
}

QueryGrid row_pass_backward(const QueryGrid& input, const AttentionParams& p,
                            const QueryGrid& dout) {
  QueryGrid dx(input.n, input.nv, input.d);
#pragma omp parallel for schedule(static)
  for (int i = 0; i < input.n; ++i) {
    Mat xi(input.nv, input.d), doi(input.nv, input.d);
    const size_t offset = static_cast<size_t>(i) * input.nv * input.d;
    std::memcpy(xi.data.data(), input.data.data() + offset,
                xi.data.size() * sizeof(double));
    std::memcpy(doi.data.data(), dout.data.data() + offset,
                doi.data.size() * sizeof(double));
    const Mat dxi = attend_sequence_backward(xi, p, doi);
    std::memcpy(dx.data.data() + offset, dxi.data.data(),
                dxi.data.size() * sizeof(double));
  }
  return dx;
}

QueryGrid col_pass_backward(const QueryGrid& input, const AttentionParams& p,
                            const QueryGrid& dout) {
  QueryGrid dx(input.n, input.nv, input.d);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < input.nv; ++j) {
    Mat xj(input.n, input.d), doj(input.n, input.d);
    for (int i = 0; i < input.n; ++i) {
      const size_t offset = (static_cast<size_t>(i) * input.nv + j) * input.d;
      std::memcpy(xj.row(i), input.data.data() + offset,
                  input.d * sizeof(double));
      std::memcpy(doj.row(i), dout.data.data() + offset,
                  input.d * sizeof(double));
    }
    const Mat dxj = attend_sequence_backward(xj, p, doj);
    for (int i = 0; i < input.n; ++i) {
      const size_t offset = (static_cast<size_t>(i) * input.nv + j) * input.d;
      std::memcpy(dx.data.data() + offset, dxj.row(i), input.d * sizeof(double));
    }
  }
  return dx;
}

}  // namespace

QueryGrid decoupled_self_attention_backward(const QueryGrid& input,
                                            const AttentionParams& p,
                                            const QueryGrid& grad_output) {
  validate_grid(input);
  validate_params(p, input.d);
  if (grad_output.n != input.n || grad_output.nv != input.nv ||
      grad_output.d != input.d) {
    throw std::invalid_argument("decoupled backward: gradient shape mismatch");
  }
  MacCounter scratch;
  const QueryGrid mid = decoupled_row_pass(input, p, scratch);
  const QueryGrid dmid = col_pass_backward(mid, p, grad_output);
  return row_pass_backward(input, p, dmid);
}

ScalingFit measure_scaling(AttentionKernel kernel,
                           const std::vector<std::pair<int, int>>& sizes,
                           int d) {
  if (sizes.size() < 3) {
    throw std::invalid_argument("measure_scaling: need at least 3 sizes");
  }
  std::uint64_t lmin = UINT64_MAX, lmax = 0;
  for (const auto& [n, nv] : sizes) {
    if (n != nv) {
      throw std::invalid_argument("measure_scaling: sizes must be square (n == nv)");
    }
    if (n < 1) throw std::invalid_argument("measure_scaling: sizes must be >= 1");
    const std::uint64_t l = static_cast<std::uint64_t>(n) * nv;
    lmin = std::min(lmin, l);
    lmax = std::max(lmax, l);
  }
  if (lmax < 10 * lmin) {
    throw std::invalid_argument(
        "measure_scaling: sizes must span at least a decade of L");
  }

  ScalingFit fit;
  for (const auto& [n, nv] : sizes) {
    const QueryGrid g = QueryGrid::random(
        n, nv, d, 0x5ca11ull ^ (static_cast<std::uint64_t>(n) << 16) ^ nv);
    const AttentionParams p = AttentionParams::random(d, 7);
    MacCounter mac;
    const auto start = std::chrono::steady_clock::now();
    (void)run_attention(kernel, g, p, mac);
    const auto stop = std::chrono::steady_clock::now();
    ScalingPoint pt;
    pt.n = n;
    pt.nv = nv;
    pt.interaction_macs = mac.interaction;
    pt.projection_macs = mac.projection;
    pt.wall_ms =
        std::chrono::duration<double, std::milli>(stop - start).count();
    fit.points.push_back(pt);
  }

  double sx = 0.0, sy = 0.0;
  for (const ScalingPoint& pt : fit.points) {
    sx += std::log(static_cast<double>(pt.n) * pt.nv);
    sy += std::log(static_cast<double>(pt.interaction_macs));
  }
  const double mean_x = sx / fit.points.size();
  const double mean_y = sy / fit.points.size();
  double num = 0.0, den = 0.0;
  for (const ScalingPoint& pt : fit.points) {
    const double dx = std::log(static_cast<double>(pt.n) * pt.nv) - mean_x;
    const double dy = std::log(static_cast<double>(pt.interaction_macs)) - mean_y;
    num += dx * dy;
    den += dx * dx;
  }
  fit.exponent = num / den;
  return fit;
}

}  // namespace vecmap
