#include "cmsm/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

namespace cmsm {

int default_thread_count() {
  if (char const *env = std::getenv("CMSM_THREADS")) {
    try {
      int const n = std::stoi(env);
      if (n >= 1) return n;
    } catch (...) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int n, int threads, std::function<void(int)> const &fn) {
  threads = std::clamp(threads, 1, std::max(n, 1));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < n; i += threads) {
          try {
            fn(i);
          } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto const &e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace cmsm
