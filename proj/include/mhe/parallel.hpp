#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

#ifdef MHE_HAVE_OPENMP
#include <omp.h>
#endif

namespace mhe {

/// Serial execution is the reference; the parallel path must reproduce it
/// bit-for-bit (reductions below are order independent).
enum class Execution { kSerial, kParallel };

struct ArgMax {
  std::int64_t index = -1;
  double value = -std::numeric_limits<double>::infinity();

  /// Larger value wins; ties go to the smaller index. NaN never wins.
  void offer(std::int64_t i, double v) {
    if (std::isnan(v)) return;
    if (index < 0 || v > value || (v == value && i < index)) {
      index = i;
      value = v;
    }
  }
  void merge(const ArgMax& other) {
    if (other.index >= 0) offer(other.index, other.value);
  }
};

/// max_{i < count} fn(i) with its first maximiser.
template <typename Fn>
ArgMax argmax_over(std::int64_t count, Execution exec, Fn&& fn) {
  ArgMax best;
  if (exec == Execution::kSerial) {
    for (std::int64_t i = 0; i < count; ++i) best.offer(i, fn(i));
    return best;
  }
#ifdef MHE_HAVE_OPENMP
#pragma omp parallel
  {
    ArgMax local;
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) local.offer(i, fn(i));
#pragma omp critical(mhe_argmax_merge)
    best.merge(local);
  }
#else
  for (std::int64_t i = 0; i < count; ++i) best.offer(i, fn(i));
#endif
  return best;
}

/// Runs fn(i) for every i; each call must own its output slot.
template <typename Fn>
void for_each_index(std::int64_t count, Execution exec, Fn&& fn) {
  if (exec == Execution::kSerial) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
#ifdef MHE_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) fn(i);
#else
  for (std::int64_t i = 0; i < count; ++i) fn(i);
#endif
}

}  // namespace mhe
