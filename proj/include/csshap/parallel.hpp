#pragma once

#include <cstddef>

namespace csshap {

// Every data-parallel kernel has a serial reference path; both produce
// bit-identical results because work items are independent and reductions
// happen afterwards in index order.
enum class Execution { kSerial, kParallel };

namespace parallel {

int max_threads();
void set_threads(int threads);

// Runs body(i) for i in [0, n). Exceptions thrown by body are rethrown on the
// calling thread (first one wins).
template <typename Body>
void for_each(std::size_t n, Execution exec, Body&& body);

}  // namespace parallel
}  // namespace csshap

#include <exception>
#include <mutex>

namespace csshap::parallel {

template <typename Body>
void for_each(std::size_t n, Execution exec, Body&& body) {
  if (exec == Execution::kSerial || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace csshap::parallel
