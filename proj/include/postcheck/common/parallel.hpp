#pragma once

#include <cstddef>
#include <exception>
#include <mutex>

#include <omp.h>

namespace postcheck {

// Every data-parallel kernel has a plain serial loop (the reference) and an
// OpenMP loop. Kernels write to disjoint per-index slots so both paths
// produce bitwise-identical results.
enum class ExecPolicy { serial, openmp };

inline ExecPolicy default_exec_policy() noexcept { return ExecPolicy::openmp; }

template <class Fn>
void parallel_for(ExecPolicy policy, std::ptrdiff_t n, Fn&& fn) {
  if (policy == ExecPolicy::serial || n < 2) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  // Exceptions may not cross the OpenMP region; the first one is rethrown.
  std::exception_ptr error;
  std::mutex error_mutex;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      fn(i);
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace postcheck
