#include "vergepipe/throttle.hpp"

#include <algorithm>
#include <cmath>

namespace vergepipe {

RateLimiter::RateLimiter(double rate_per_second) : rate_(rate_per_second) {
  if (rate_ > 0.0) {
    interval_ = std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(1e9 / rate_)));
  }
}

void RateLimiter::acquire() {
  if (rate_ <= 0.0) return;
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = Clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval_;
  }
  std::this_thread::sleep_until(slot);
}

std::chrono::milliseconds RetryPolicy::delay_before(int attempt) const {
  if (attempt <= 1) return std::chrono::milliseconds{0};
  const double scaled =
      static_cast<double>(base_delay.count()) * std::pow(multiplier, attempt - 2);
  const double capped = std::min(scaled, static_cast<double>(max_delay.count()));
  return std::chrono::milliseconds{static_cast<std::int64_t>(capped)};
}

}  // namespace vergepipe
