// SPDX-License-Identifier: Apache-2.0
#include "vecmap/attention_ref.hpp"

#include <cmath>
#include <vector>

namespace vecmap::ref {

namespace {

Mat mul(const Mat& a, const Mat& b) {
  Mat c(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    for (int j = 0; j < b.cols; ++j) {
      double sum = 0.0;
      for (int k = 0; k < a.cols; ++k) sum += a.at(i, k) * b.at(k, j);
      c.at(i, j) = sum;
    }
  }
  return c;
}

Mat flatten(const QueryGrid& g) {
  Mat x(g.tokens(), g.d);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.nv; ++j) {
      for (int c = 0; c < g.d; ++c) x.at(i * g.nv + j, c) = g.at(i, j, c);
    }
  }
  return x;
}

QueryGrid unflatten(const Mat& x, int n, int nv) {
  QueryGrid g(n, nv, x.cols);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < nv; ++j) {
      for (int c = 0; c < x.cols; ++c) g.at(i, j, c) = x.at(i * nv + j, c);
    }
  }
  return g;
}

}  // namespace

Mat attention_block(const Mat& q, const Mat& k, const Mat& v, double scale,
                    int heads) {
  const int dh = q.cols / heads;
  Mat out(q.rows, q.cols);
  for (int h = 0; h < heads; ++h) {
    const int base = h * dh;
    for (int a = 0; a < q.rows; ++a) {
      std::vector<double> scores(k.rows);
      double mx = -1e300;
      for (int b = 0; b < k.rows; ++b) {
        double dot = 0.0;
        for (int c = 0; c < dh; ++c) dot += q.at(a, base + c) * k.at(b, base + c);
        scores[b] = dot * scale;
        if (scores[b] > mx) mx = scores[b];
      }
      double denom = 0.0;
      for (int b = 0; b < k.rows; ++b) {
        scores[b] = std::exp(scores[b] - mx);
        denom += scores[b];
      }
      for (int c = 0; c < dh; ++c) {
        double sum = 0.0;
        for (int b = 0; b < k.rows; ++b) {
          sum += (scores[b] / denom) * v.at(b, base + c);
        }
        out.at(a, base + c) = sum;
      }
    }
  }
  return out;
}

QueryGrid vanilla_self_attention(const QueryGrid& g, const AttentionParams& p) {
  const Mat x = flatten(g);
  return unflatten(
      attention_block(mul(x, p.wq), mul(x, p.wk), mul(x, p.wv), p.scale, p.heads),
      g.n, g.nv);
}

QueryGrid decoupled_row_pass(const QueryGrid& g, const AttentionParams& p) {
  QueryGrid out(g.n, g.nv, g.d);
  for (int i = 0; i < g.n; ++i) {
    Mat x(g.nv, g.d);
    for (int j = 0; j < g.nv; ++j) {
      for (int c = 0; c < g.d; ++c) x.at(j, c) = g.at(i, j, c);
    }
    const Mat o = attention_block(mul(x, p.wq), mul(x, p.wk), mul(x, p.wv),
                                  p.scale, p.heads);
    for (int j = 0; j < g.nv; ++j) {
      for (int c = 0; c < g.d; ++c) out.at(i, j, c) = o.at(j, c);
    }
  }
  return out;
}

QueryGrid decoupled_col_pass(const QueryGrid& g, const AttentionParams& p) {
  QueryGrid out(g.n, g.nv, g.d);
  for (int j = 0; j < g.nv; ++j) {
    Mat x(g.n, g.d);
    for (int i = 0; i < g.n; ++i) {
      for (int c = 0; c < g.d; ++c) x.at(i, c) = g.at(i, j, c);
    }
    const Mat o = attention_block(mul(x, p.wq), mul(x, p.wk), mul(x, p.wv),
                                  p.scale, p.heads);
    for (int i = 0; i < g.n; ++i) {
      for (int c = 0; c < g.d; ++c) out.at(i, j, c) = o.at(i, c);
    }
  }
  return out;
}

QueryGrid decoupled_self_attention(const QueryGrid& g, const AttentionParams& p) {
  return decoupled_col_pass(decoupled_row_pass(g, p), p);
}

namespace {

QueryGrid criss_cross_pass(const QueryGrid& g, const AttentionParams& p) {
  const Mat x = flatten(g);
  const Mat q = mul(x, p.wq);
  const Mat k = mul(x, p.wk);
  const Mat v = mul(x, p.wv);
  QueryGrid out(g.n, g.nv, g.d);
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.nv; ++j) {
      // Explicit key set: row tokens, then the column minus the duplicate.
      std::vector<int> keyset;
      for (int j2 = 0; j2 < g.nv; ++j2) keyset.push_back(i * g.nv + j2);
      for (int i2 = 0; i2 < g.n; ++i2) {
        if (i2 != i) keyset.push_back(i2 * g.nv + j);
      }
      Mat kk(static_cast<int>(keyset.size()), g.d);
      Mat vv(static_cast<int>(keyset.size()), g.d);
      for (size_t s = 0; s < keyset.size(); ++s) {
        for (int c = 0; c < g.d; ++c) {
          kk.at(static_cast<int>(s), c) = k.at(keyset[s], c);
          vv.at(static_cast<int>(s), c) = v.at(keyset[s], c);
        }
      }
      Mat qq(1, g.d);
      for (int c = 0; c < g.d; ++c) qq.at(0, c) = q.at(i * g.nv + j, c);
      const Mat o = attention_block(qq, kk, vv, p.scale, p.heads);
      for (int c = 0; c < g.d; ++c) out.at(i, j, c) = o.at(0, c);
    }
  }
  return out;
}

}  // namespace

QueryGrid criss_cross_attention(const QueryGrid& g, const AttentionParams& p) {
  return criss_cross_pass(criss_cross_pass(g, p), p);
}

QueryGrid run_attention(AttentionKernel kernel, const QueryGrid& g,
                        const AttentionParams& p) {
  switch (kernel) {
    case AttentionKernel::Vanilla: return vanilla_self_attention(g, p);
    case AttentionKernel::Decoupled: return decoupled_self_attention(g, p);
    case AttentionKernel::CrissCross: return criss_cross_attention(g, p);
  }
  return g;
}

}  // namespace vecmap::ref
