// SPDX-License-Identifier: Apache-2.0
//
// Compares the OpenMP attention kernels against the serial reference
// implementations: wall time, speedup, and max output deviation per kernel
// and grid size.
//
//   bench_kernels [sizes_csv] [dim] [repeats]
//   bench_kernels 16,32,48 32 3

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "vecmap/attention.hpp"
#include "vecmap/attention_ref.hpp"

using namespace vecmap;

namespace {

std::vector<int> parse_sizes(const char* csv) {
  std::vector<int> out;
  std::string s(csv);
  size_t pos = 0;
  while (pos < s.size()) {
    const size_t comma = s.find(',', pos);
    out.push_back(std::atoi(s.substr(pos, comma - pos).c_str()));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

double max_abs_diff(const QueryGrid& a, const QueryGrid& b) {
  double worst = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  }
  return worst;
}

template <typename F>
double time_ms(F&& fn, int repeats) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    const auto stop = std::chrono::steady_clock::now();
    best = std::min(best,
                    std::chrono::duration<double, std::milli>(stop - start).count());
  }
  return best;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<int> sizes = parse_sizes(argc > 1 ? argv[1] : "16,32,48");
  const int d = argc > 2 ? std::atoi(argv[2]) : 32;
  const int repeats = argc > 3 ? std::atoi(argv[3]) : 3;
  if (sizes.empty() || d < 1 || repeats < 1) {
    std::fprintf(stderr, "usage: bench_kernels [sizes_csv] [dim] [repeats]\n");
    return 2;
  }

  std::printf("threads %d, d = %d, best of %d runs\n", omp_get_max_threads(), d,
              repeats);
  std::printf("kernel            n    nv  parallel_ms  serial_ms  speedup  max_dev\n");

  const AttentionKernel kernels[] = {AttentionKernel::Vanilla,
                                     AttentionKernel::Decoupled,
                                     AttentionKernel::CrissCross};
  bool all_close = true;
  for (AttentionKernel kernel : kernels) {
    for (int n : sizes) {
      const QueryGrid g = QueryGrid::random(n, n, d, 1234 + n);
      const AttentionParams p = AttentionParams::random(d, 4321);

      QueryGrid parallel_out, serial_out;
      MacCounter mac;
      const double par_ms = time_ms(
          [&] {
            mac.reset();
            parallel_out = run_attention(kernel, g, p, mac);
          },
          repeats);
      const double ser_ms =
          time_ms([&] { serial_out = ref::run_attention(kernel, g, p); }, repeats);

      const double dev = max_abs_diff(parallel_out, serial_out);
      all_close &= dev < 1e-10;
      std::printf("%-12s %6d %5d %12.2f %10.2f %8.2f  %.2e\n",
                  kernel_name(kernel), n, n, par_ms, ser_ms,
                  ser_ms / std::max(par_ms, 1e-9), dev);
    }
  }
  if (!all_close) {
    std::fprintf(stderr, "FAIL: parallel and serial outputs diverged\n");
    return 1;
  }
  std::printf("parallel kernels match the serial reference on every size\n");
  return 0;
}
