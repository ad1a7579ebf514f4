#include "fpscan/pipeline/rate_limiter.hpp"

#include <cmath>
#include <stdexcept>
#include <thread>

namespace fpscan::pipeline {

Clock::time_point SystemClock::now() {
  return std::chrono::time_point_cast<duration>(std::chrono::steady_clock::now());
}

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

SystemClock& SystemClock::instance() {
  static SystemClock clock;
  return clock;
}

Clock::time_point ManualClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

void ManualClock::sleep_until(time_point t) {
  std::lock_guard lock(mutex_);
  if (t > now_) now_ = t;
}

void ManualClock::advance(duration d) {
  std::lock_guard lock(mutex_);
  now_ += d;
}

RateLimiter::RateLimiter(double rate_per_second, Clock& clock) : rate_(rate_per_second), clock_(clock) {
  if (!(rate_per_second > 0) || !std::isfinite(rate_per_second)) {
    throw std::invalid_argument("rate limit must be positive");
  }
  // Rounded up so rounding can never push the rate above the limit.
  interval_ = Clock::duration(static_cast<std::int64_t>(std::ceil(1e9 / rate_per_second)));
}

Clock::time_point RateLimiter::acquire(std::uint32_t n) {
  if (n == 0) throw std::invalid_argument("acquire count must be at least 1");
  Clock::time_point slot;
  {
    std::lock_guard lock(mutex_);
    const auto now = clock_.now();
    slot = (!started_ || next_ < now) ? now : next_;
    started_ = true;
    next_ = slot + interval_ * n;
  }
  clock_.sleep_until(slot);
  return slot;
}

}  // namespace fpscan::pipeline
