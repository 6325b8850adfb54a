#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

namespace vergepipe {

/// Request pacing shared between workers: callers are released no faster
/// than `rate_per_second`, each acquiring the next free slot in turn.
class RateLimiter {
 public:
  using Clock = std::chrono::steady_clock;

  explicit RateLimiter(double rate_per_second);

  /// Blocks until the caller's slot arrives. A non-positive rate never blocks.
  void acquire();

  double rate() const { return rate_; }

 private:
  double rate_;
  std::chrono::nanoseconds interval_{0};
  std::mutex mutex_;
  Clock::time_point next_slot_{};
};

/// Failure from a remote service. Only `Transient` failures are retried.
class FetchError : public std::runtime_error {
 public:
  enum class Kind { Transient, Auth, Malformed };

  FetchError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }
  bool retryable() const { return kind_ == Kind::Transient; }

 private:
  Kind kind_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_delay{200};
  std::chrono::milliseconds max_delay{5000};
  double multiplier = 2.0;

  /// Delay before attempt `attempt` (1-based; attempt 1 has no delay).
  std::chrono::milliseconds delay_before(int attempt) const;
};

/// Runs `fn` until it succeeds, throws a non-retryable error, or the policy
/// runs out of attempts (the last error is rethrown).
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
  for (int attempt = 1;; ++attempt) {
    try {
      return fn();
    } catch (const FetchError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
    }
    std::this_thread::sleep_for(policy.delay_before(attempt + 1));
  }
}

}  // namespace vergepipe
