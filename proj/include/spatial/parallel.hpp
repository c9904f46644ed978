#pragma once

#include <omp.h>

namespace spatial {

/// Sets the OpenMP thread count for the lifetime of the object; 0 keeps the
/// current setting.
class ThreadScope {
 public:
  explicit ThreadScope(int threads)
      : previous_(omp_get_max_threads()), current_(threads <= 0 ? previous_ : threads) {
    omp_set_num_threads(current_);
  }
  ~ThreadScope() { omp_set_num_threads(previous_); }

  ThreadScope(const ThreadScope&) = delete;
  ThreadScope& operator=(const ThreadScope&) = delete;

  int threads() const { return current_; }

 private:
  int previous_;
  int current_;
};

}  // namespace spatial
