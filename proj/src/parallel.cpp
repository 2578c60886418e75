#include "sensr/parallel.hpp"

#include <atomic>

namespace sensr {

namespace {
std::atomic<int> g_threads{0};
}

void set_threads(int n) { g_threads.store(n < 0 ? 0 : n); }

int threads() { return g_threads.load(); }

int effective_threads() {
#ifdef _OPENMP
  const int req = g_threads.load();
  return req == 0 ? omp_get_max_threads() : req;
#else
  return 1;
#endif
}

bool openmp_enabled() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

}  // namespace sensr
