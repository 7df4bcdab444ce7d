#include "defgrid/errors.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <utility>

namespace defgrid {

DegenerateCell::DegenerateCell(std::size_t cell)
    : Error(fmt::format("degenerate cell {}", cell)), cell_(cell) {}

FlippedCells::FlippedCells(std::vector<std::size_t> cells)
    : Error(fmt::format("offsets flip cells [{}]", fmt::join(cells, ", "))),
      cells_(std::move(cells)) {}

NumericFailure::NumericFailure(std::size_t iteration)
    : Error(fmt::format("non-finite gradient at iteration {}", iteration)),
      iteration_(iteration) {}

}  // namespace defgrid
