#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace soilmark::detail {

// Fixed-height row strips so the work partition (and therefore every
// merge order) is independent of the machine's core count.
constexpr int kStripRows = 64;

inline int strip_count(int height) {
  return (height + kStripRows - 1) / kStripRows;
}

// fn(row_begin, row_end, strip_index); strips are disjoint, all rows covered.
template <typename F>
void parallel_strips(int height, F&& fn) {
  const int nstrips = strip_count(height);
  unsigned hw = std::thread::hardware_concurrency();
  int nthreads = std::max(1, std::min<int>(hw ? hw : 1, nstrips));
  if (nthreads == 1) {
    for (int s = 0; s < nstrips; ++s) {
      fn(s * kStripRows, std::min(height, (s + 1) * kStripRows), s);
    }
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    workers.emplace_back([&, t]() {
      for (int s = t; s < nstrips; s += nthreads) {
        fn(s * kStripRows, std::min(height, (s + 1) * kStripRows), s);
      }
    });
  }
  for (auto& w : workers) w.join();
}

}  // namespace soilmark::detail
