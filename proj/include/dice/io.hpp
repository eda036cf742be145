#pragma once

#include <filesystem>
#include <vector>

#include "dice/image.hpp"

namespace dice {

/// Binary PGM (P5), 8- or 16-bit. Pixels scaled to [0, 1] by maxval.
Image read_pgm(const std::filesystem::path& path);

/// Clamps to [0, 1] and quantizes to `bit_depth` (8 or 16) bits.
void write_pgm(const std::filesystem::path& path, const Image& img, int bit_depth = 16);

/// Every *.pgm in `dir`, sorted by filename; IoError when there are none.
std::vector<std::filesystem::path> list_pgm_files(const std::filesystem::path& dir);

/// Every *.pgm in `dir`, sorted by filename. All must be square with equal size.
/// Any failure is reported with the offending filename and aborts the batch.
std::vector<Image> load_image_dir(const std::filesystem::path& dir);

/// Sinogram file: "DICESINO", u32 n_angles, u32 n_detectors, u64 reserved (all
/// little-endian), then n_angles * n_detectors little-endian float64 values,
/// angle-major.
void write_sinogram(const std::filesystem::path& path, const Sinogram& sino);
Sinogram read_sinogram(const std::filesystem::path& path);

/// Headerless little-endian float64 array.
void write_raw_f64(const std::filesystem::path& path, std::span<const double> values);
Vec read_raw_f64(const std::filesystem::path& path);

}  // namespace dice
