#pragma once

// Thin OpenMP wrappers. Every helper produces results that do not depend on
// the worker count: loops write disjoint outputs, and reductions combine
// fixed-size blocks in index order.

#include <algorithm>
#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace paracut::parallel {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_num_procs();
#else
  return 1;
#endif
}

/// fn(i) for i in [0, count).
template <class Fn>
void for_each(std::size_t count, int threads, Fn&& fn) {
#ifdef _OPENMP
  const long long n = static_cast<long long>(count);
#pragma omp parallel for schedule(static) num_threads(std::max(threads, 1)) if (threads > 1 && count > 1)
  for (long long i = 0; i < n; ++i) fn(static_cast<std::size_t>(i));
#else
  (void)threads;
  for (std::size_t i = 0; i < count; ++i) fn(i);
#endif
}

/// fn(state, i) with one `make()` state per worker; dynamic scheduling for
/// uneven work items such as chains of different lengths.
template <class Make, class Fn>
void for_each_with(std::size_t count, int threads, Make&& make, Fn&& fn) {
#ifdef _OPENMP
  const long long n = static_cast<long long>(count);
#pragma omp parallel num_threads(std::max(threads, 1)) if (threads > 1 && count > 1)
  {
    auto state = make();
#pragma omp for schedule(dynamic, 16)
    for (long long i = 0; i < n; ++i) fn(state, static_cast<std::size_t>(i));
  }
#else
  (void)threads;
  auto state = make();
  for (std::size_t i = 0; i < count; ++i) fn(state, i);
#endif
}

inline constexpr std::size_t kReductionBlock = 4096;

/// Sum of term(i) over [0, count), bitwise identical for any thread count.
template <class Term>
double sum(std::size_t count, int threads, Term&& term) {
  const std::size_t blocks = (count + kReductionBlock - 1) / kReductionBlock;
  std::vector<double> partial(blocks, 0.0);
  for_each(blocks, threads, [&](std::size_t b) {
    const std::size_t lo = b * kReductionBlock;
    const std::size_t hi = std::min(count, lo + kReductionBlock);
    double acc = 0.0;
    for (std::size_t i = lo; i < hi; ++i) acc += term(i);
    partial[b] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace paracut::parallel
