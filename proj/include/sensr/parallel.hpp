#ifndef SENSR_PARALLEL_HPP
#define SENSR_PARALLEL_HPP

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sensr {

// Process-wide worker count for the OpenMP kernels. 0 means "hardware
// default". Every parallel kernel writes per-index results into its own slot
// and reduces serially in index order afterwards, so outputs are bit-identical
// for any thread count.
void set_threads(int n);
int threads();

// Threads the next parallel region will actually use.
int effective_threads();

bool openmp_enabled();

// Serial reference loop. Kept separate so tests and the benchmark can compare
// the OpenMP path against it explicitly.
template <typename F>
void serial_for(std::size_t n, F&& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

template <typename F>
void parallel_for(std::size_t n, F&& body) {
#ifdef _OPENMP
  const int nt = effective_threads();
  if (nt > 1 && n > 1) {
#pragma omp parallel for num_threads(nt) schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      body(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  serial_for(n, body);
}

}  // namespace sensr

#endif
