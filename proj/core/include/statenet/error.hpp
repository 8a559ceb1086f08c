#pragma once

#include <stdexcept>
#include <string>

namespace statenet {

// Shape/dimension disagreement between tensors or layers. Messages name
// both shapes involved.
class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called in an invalid order (e.g. backward before
// forward, optimizer step without gradients).
class StateError : public std::runtime_error {
 public:
  explicit StateError(const std::string& what) : std::runtime_error(what) {}
};

// A value outside its documented domain (bad fraction, label out of
// range, singular transform, unsupported format version).
class ValueError : public std::runtime_error {
 public:
  explicit ValueError(const std::string& what) : std::runtime_error(what) {}
};

// An image file could not be decoded. Message names the path.
class DecodeError : public std::runtime_error {
 public:
  explicit DecodeError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem-level failure (unreadable/unwritable path, truncated blob).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Training diverged (NaN loss); message names epoch and batch index.
class TrainAbort : public std::runtime_error {
 public:
  explicit TrainAbort(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace statenet
