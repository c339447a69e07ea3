#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "foveate/grid.hpp"

namespace foveate {

/// Binary mask as a P5 PGM with maxval 1.
void write_mask_pgm(std::ostream& os, const Mask& mask);
/// Linear min..max scaling to 8-bit P5. A constant grid maps to 0.
void write_scaled_pgm(std::ostream& os, const GridD& grid);
/// Intensity image in [0,1] to 8-bit P5 (clamped).
void write_intensity_pgm(std::ostream& os, const GridD& image);

/// Reads P2 or P5 with maxval <= 255. Values are returned unscaled.
Grid<std::uint8_t> read_pgm(std::istream& is);
/// Any nonzero pixel is set.
Mask read_mask_pgm(const std::filesystem::path& path);

void save_mask_pgm(const std::filesystem::path& path, const Mask& mask);
void save_scaled_pgm(const std::filesystem::path& path, const GridD& grid);
void save_intensity_pgm(const std::filesystem::path& path, const GridD& image);

/// Row-major plain-text decimal grid, one row per line, `digits` significant digits.
void write_decimal_grid(std::ostream& os, const GridD& grid, int digits = 9);
GridD read_decimal_grid(std::istream& is);

}  // namespace foveate
