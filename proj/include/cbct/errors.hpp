// Copyright 2026 The cbct Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cbct {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array dimensions disagree with each other or with the geometry.
class ShapeError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// Invalid scan parameters or a degenerate projection (z ~ 0).
class GeometryError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

/// Failure inside the rank-grid executor. `rank()` is -1 when no single
/// rank can be blamed.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, int rank = -1) : Error(what), rank_(rank) {}
  int rank() const noexcept { return rank_; }

 private:
  int rank_;
};

/// A collective did not complete because some member never contributed.
class TimeoutError : public PipelineError {
 public:
  using PipelineError::PipelineError;
};

}  // namespace cbct
