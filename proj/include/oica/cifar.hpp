#pragma once

// CIFAR-10 binary batches: 3073-byte records (label, then 32x32 red, green
// and blue planes, row-major). Images are converted to grayscale in [0, 1]
// and cut into 7x7 patches around every pixel at least 3 pixels from the
// border, giving 26 x 26 = 676 patches of dimension 49 per image.

#include "oica/corela.hpp"
#include "oica/mixing.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

namespace oica {

inline constexpr Index kCifarSide = 32;
inline constexpr Index kCifarRecordBytes = 1 + 3 * kCifarSide * kCifarSide;
inline constexpr Index kPatchSide = 7;
inline constexpr Index kPatchDim = kPatchSide * kPatchSide;
inline constexpr Index kPatchRadius = kPatchSide / 2;
inline constexpr Index kCentersPerSide = kCifarSide - 2 * kPatchRadius;
inline constexpr Index kPatchesPerImage = kCentersPerSide * kCentersPerSide;

/// luma: Rec. 601 weights 0.299 R + 0.587 G + 0.114 B. mean: (R + G + B) / 3.
enum class GrayMode { luma, mean };

const char* to_string(GrayMode g) noexcept;
GrayMode parse_gray_mode(const std::string& s);

using CifarRecord = std::array<std::uint8_t, kCifarRecordBytes>;

/// Number of records; FormatError unless the size is a positive multiple of
/// 3073 bytes, InputError (with the path) when the file is missing.
Index cifar_image_count(const std::filesystem::path& batch);

/// 32 x 32 grayscale image in [0, 1]; entry (r, c) is row r, column c.
Matrix cifar_gray(const CifarRecord& record, GrayMode gray);

/// 49 x 676 patches of one grayscale image. Column order is row-major over
/// centers; inside a patch entries are row-major.
Matrix image_patches(const Matrix& gray_image);

/// Streams the batch, calling `sink` with one 49 x 676 block per image.
/// At most `max_images` records are read (0 reads all).
void for_each_image_patches(const std::filesystem::path& batch, GrayMode gray, Index max_images,
                            const std::function<void(const Matrix&)>& sink);

/// Writes every patch of the batch into a container (49 rows, 676 columns
/// per image) without materializing the patch matrix. Returns the patch count.
Index write_batch_patches(const std::filesystem::path& batch, const std::filesystem::path& out, GrayMode gray,
                          Index max_images = 0);

/// Flips columns so each has a nonnegative inner product with the first one.
Matrix align_signs(const Matrix& d);

/// Binary PGM (P5) of a side x side component, rescaled to the full gray
/// range and enlarged by an integer factor.
std::string component_pgm(const Vector& component, Index side, Index scale = 8);

/// All components tiled into one PGM, `per_row` tiles per row, with a
/// 1-pixel (unscaled) gap.
std::string components_montage_pgm(const Matrix& d, Index side, Index per_row, Index scale = 4);

}  // namespace oica
