#ifndef INSIDER_LOG_H_
#define INSIDER_LOG_H_

#include <atomic>
#include <iostream>
#include <mutex>
#include <string_view>

namespace insider {

inline std::atomic<bool>& warnings_enabled() {
  static std::atomic<bool> enabled{true};
  return enabled;
}

inline void log_warning(std::string_view message) {
  if (warnings_enabled().load(std::memory_order_relaxed)) {
    std::cerr << "warning: " << message << '\n';
  }
}

// Progress lines on stderr, kept whole when users train concurrently.
// Silenced together with warnings.
inline void log_progress(std::string_view message) {
  if (!warnings_enabled().load(std::memory_order_relaxed)) return;
  static std::mutex mu;
  const std::lock_guard<std::mutex> lock(mu);
  std::cerr << message << std::endl;
}

}  // namespace insider

#endif  // INSIDER_LOG_H_
