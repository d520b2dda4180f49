#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace cor {

/// Execution path for per-instance kernels. Serial is the reference; both must produce
/// identical results because every item derives its randomness from its own index.
enum class Policy { Serial, Parallel };

template <class Fn>
void for_each_index(std::size_t n, Policy policy, Fn&& fn) {
  if (policy == Policy::Parallel) {
    // Exceptions must not cross the OpenMP region; the lowest failing index is rethrown so
    // the reported error matches the serial path.
    const auto count = static_cast<long long>(n);
    std::exception_ptr first_error;
    long long first_index = count;
    std::mutex mu;
#pragma omp parallel for schedule(dynamic, 16)
    for (long long i = 0; i < count; ++i) {
      try {
        fn(static_cast<std::size_t>(i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (i < first_index) {
          first_index = i;
          first_error = std::current_exception();
        }
      }
    }
    if (first_error) std::rethrow_exception(first_error);
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    fn(i);
  }
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cor
