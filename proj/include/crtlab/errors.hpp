#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace crtlab {

/// Malformed arguments or data that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An observation that has zero probability under every value of the
/// variable being resampled (e.g. deterministic rewards contradicting a choice).
class InconsistentObservation : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A simulated trial failed to terminate within the press cap.
class SimulationOverflow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An experiment description that cannot be run (bad combination, zero counts).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A report or session file could not be read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Failure inside a resample or session, tagged with its index.
class IndexedError : public std::runtime_error {
 public:
  IndexedError(std::string what_kind, std::size_t index, const std::string& cause)
      : std::runtime_error(what_kind + " " + std::to_string(index) + ": " + cause),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

class ResampleError : public IndexedError {
 public:
  ResampleError(std::size_t index, const std::string& cause)
      : IndexedError("resample", index, cause) {}
};

class SessionError : public IndexedError {
 public:
  SessionError(std::size_t index, const std::string& cause)
      : IndexedError("session", index, cause) {}
};

}  // namespace crtlab
