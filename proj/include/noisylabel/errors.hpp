#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace noisylabel {

// Bad arguments to a pure operation (empty input, out-of-range parameter, length mismatch).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent or incomplete configuration. The message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t epoch, const std::string& what)
      : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class ExperimentError : public std::runtime_error {
 public:
  ExperimentError(std::size_t run_index, const std::string& what)
      : std::runtime_error("run " + std::to_string(run_index) + ": " + what), run_index_(run_index) {}

  std::size_t run_index() const noexcept { return run_index_; }

 private:
  std::size_t run_index_;
};

}  // namespace noisylabel
