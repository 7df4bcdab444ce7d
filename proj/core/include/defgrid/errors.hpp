#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace defgrid {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

/// A triangle whose |signed area| is at or below the degeneracy threshold.
class DegenerateCell : public Error {
 public:
  explicit DegenerateCell(std::size_t cell);
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t cell_;
};

/// Grid with at least one non-positive cell area.
class InvalidGrid : public Error {
 public:
  using Error::Error;
};

/// Offsets that would fold the grid; carries the offending cells.
class FlippedCells : public Error {
 public:
  explicit FlippedCells(std::vector<std::size_t> cells);
  const std::vector<std::size_t>& cells() const noexcept { return cells_; }

 private:
  std::vector<std::size_t> cells_;
};

class NumericFailure : public Error {
 public:
  explicit NumericFailure(std::size_t iteration);
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t iteration_;
};

/// Mask without any foreground pixel touching background.
class NoBoundary : public Error {
 public:
  using Error::Error;
};

class DegenerateSeeds : public Error {
 public:
  using Error::Error;
};

}  // namespace defgrid
