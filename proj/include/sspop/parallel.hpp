#ifndef SSPOP_PARALLEL_HPP
#define SSPOP_PARALLEL_HPP

#include <exception>
#include <utility>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sspop {

inline int hardware_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Runs fn(i) for i in [0, count). threads <= 1 runs the plain serial loop,
// which is the reference path the parallel one is tested against: tasks must
// write only to their own output slot, so results are identical for any
// thread count. fn must not throw; use parallel_for_capturing otherwise.
template <typename F>
void parallel_for(int count, int threads, F&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (int i = 0; i < count; ++i) fn(i);
#else
  for (int i = 0; i < count; ++i) fn(i);
#endif
}

// Same contract, but exceptions thrown by tasks are captured and the first
// one (by task index) is rethrown after the loop completes.
template <typename F>
void parallel_for_capturing(int count, int threads, F&& fn) {
  std::vector<std::exception_ptr> errors(count);
  parallel_for(count, threads, [&](int i) {
    try {
      fn(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  });
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace sspop

#endif
