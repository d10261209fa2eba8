#pragma once

#include <cstddef>
#include <span>

namespace hazebayes {

// Pairwise (cascade) summation. Error grows like O(log n) rounding steps
// instead of O(n), which the objective needs at sigma^2 = 1e-5 scale.
// Deterministic: the split points depend only on the length.
inline double pairwise_sum(std::span<const double> v) {
  const std::size_t n = v.size();
  if (n <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

template <typename F>
double pairwise_sum_indexed(std::size_t begin, std::size_t end, F&& term) {
  const std::size_t n = end - begin;
  if (n <= 16) {
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    return s;
  }
  const std::size_t mid = begin + n / 2;
  return pairwise_sum_indexed(begin, mid, term) + pairwise_sum_indexed(mid, end, term);
}

}  // namespace hazebayes
