#pragma once

#include <cstdint>
#include <filesystem>

#include <Eigen/Core>

namespace xvloc {

/// 8-bit single-channel raster, row-major, row 0 first in the file.
using Gray8 = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Reads binary (P5) or ASCII (P2) PGM with maxval <= 255. Throws IoError.
Gray8 read_pgm(const std::filesystem::path& path);

/// Writes binary P5. Throws IoError.
void write_pgm(const std::filesystem::path& path, const Gray8& image);

/// Reads an 8-bit grayscale PNG; colour, alpha or 16-bit images are rejected.
Gray8 read_png(const std::filesystem::path& path);

/// Dispatches on extension (.pgm / .png).
Gray8 read_gray8(const std::filesystem::path& path);

}  // namespace xvloc
