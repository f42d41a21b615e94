#pragma once

#include <stdexcept>
#include <string>

namespace opdyn {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or non-finite input data.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Scenario or law configuration that cannot be run (schema, partition, stability guard).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A requested computation exceeds its configured step or cost budget.
class BudgetError : public Error {
 public:
  using Error::Error;
};

class KernelError : public Error {
 public:
  using Error::Error;
};

/// Measure operations refused (signed measures, mass mismatch, wrong dimension).
class MeasureError : public Error {
 public:
  using Error::Error;
};

/// A runtime monitor tripped during integration. Carries the time and the monitor name.
class MonitorViolation : public Error {
 public:
  MonitorViolation(std::string monitor, double time, long index, const std::string& detail)
      : Error("monitor '" + monitor + "' violated at t=" + std::to_string(time) +
              (index >= 0 ? " (index " + std::to_string(index) + ")" : std::string()) + ": " +
              detail),
        monitor_(std::move(monitor)),
        time_(time),
        index_(index) {}

  const std::string& monitor() const noexcept { return monitor_; }
  double time() const noexcept { return time_; }
  long index() const noexcept { return index_; }

 private:
  std::string monitor_;
  double time_;
  long index_;
};

}  // namespace opdyn
