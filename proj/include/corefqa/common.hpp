#pragma once

#include <stdexcept>
#include <string>

namespace corefqa {

// Shape/dimension mismatches between tensors or between a tensor and an op contract.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed input files, out-of-range spans, broken dataset invariants.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Bad run configuration (nonpositive weights, missing keys, unknown variants).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Index out of range for an op that addresses a single element (e.g. a class target).
class IndexError : public std::runtime_error {
 public:
  explicit IndexError(const std::string& what) : std::runtime_error(what) {}
};

// Training aborted (non-finite loss, missing checkpoint parameters).
class TrainError : public std::runtime_error {
 public:
  explicit TrainError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace corefqa
