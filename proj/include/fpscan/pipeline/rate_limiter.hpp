#pragma once

#include <chrono>
#include <cstdint>
#include <mutex>

namespace fpscan::pipeline {

/// Time source for the limiter, replaceable in tests.
class Clock {
 public:
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<std::chrono::steady_clock, duration>;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
};

class SystemClock final : public Clock {
 public:
  time_point now() override;
  void sleep_until(time_point t) override;
  static SystemClock& instance();
};

/// Synthetic clock: sleeping advances time instead of blocking.
class ManualClock final : public Clock {
 public:
  time_point now() override;
  void sleep_until(time_point t) override;
  void advance(duration d);

 private:
  std::mutex mutex_;
  time_point now_{};
};

/// Paces permissions evenly at `rate` per second, so any window of one
/// second sees at most `rate` grants. Thread-safe.
class RateLimiter {
 public:
  explicit RateLimiter(double rate_per_second, Clock& clock = SystemClock::instance());

  /// Blocks until n more operations may start; returns the granted slot.
  Clock::time_point acquire(std::uint32_t n = 1);

  double rate() const { return rate_; }

 private:
  double rate_;
  Clock::duration interval_;
  Clock& clock_;
  std::mutex mutex_;
  Clock::time_point next_{};
  bool started_ = false;
};

}  // namespace fpscan::pipeline
