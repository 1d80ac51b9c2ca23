#include "oica/cifar.hpp"

#include "oica/errors.hpp"
#include "oica/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace oica {

const char* to_string(GrayMode g) noexcept { return g == GrayMode::luma ? "luma" : "mean"; }

GrayMode parse_gray_mode(const std::string& s) {
  if (s == "luma") return GrayMode::luma;
  if (s == "mean") return GrayMode::mean;
  throw InputError("unknown gray mode '" + s + "' (expected luma or mean)");
}

Index cifar_image_count(const std::filesystem::path& batch) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(batch, ec);
  if (ec) throw InputError("cannot open CIFAR batch: " + batch.string());
  if (size == 0 || size % static_cast<std::uintmax_t>(kCifarRecordBytes) != 0)
    throw FormatError(batch.string() + ": size " + std::to_string(size) + " is not a positive multiple of " +
                      std::to_string(kCifarRecordBytes) + " bytes");
  return static_cast<Index>(size / static_cast<std::uintmax_t>(kCifarRecordBytes));
}

Matrix cifar_gray(const CifarRecord& record, GrayMode gray) {
  constexpr Index plane = kCifarSide * kCifarSide;
  const double wr = gray == GrayMode::luma ? 0.299 : 1.0 / 3.0;
  const double wg = gray == GrayMode::luma ? 0.587 : 1.0 / 3.0;
  const double wb = gray == GrayMode::luma ? 0.114 : 1.0 / 3.0;
  Matrix img(kCifarSide, kCifarSide);
  for (Index r = 0; r < kCifarSide; ++r)
    for (Index c = 0; c < kCifarSide; ++c) {
      const Index px = 1 + r * kCifarSide + c;
      img(r, c) = (wr * record[static_cast<std::size_t>(px)] + wg * record[static_cast<std::size_t>(px + plane)] +
                   wb * record[static_cast<std::size_t>(px + 2 * plane)]) /
                  255.0;
    }
  return img;
}

Matrix image_patches(const Matrix& g) {
  if (g.rows() != kCifarSide || g.cols() != kCifarSide) throw InputError("image_patches: expected a 32 x 32 image");
  Matrix out(kPatchDim, kPatchesPerImage);
  Index col = 0;
  for (Index r = kPatchRadius; r < kCifarSide - kPatchRadius; ++r)
    for (Index c = kPatchRadius; c < kCifarSide - kPatchRadius; ++c, ++col)
      for (Index dr = 0; dr < kPatchSide; ++dr)
        for (Index dc = 0; dc < kPatchSide; ++dc)
          out(dr * kPatchSide + dc, col) = g(r - kPatchRadius + dr, c - kPatchRadius + dc);
  return out;
}

void for_each_image_patches(const std::filesystem::path& batch, GrayMode gray, Index max_images,
                            const std::function<void(const Matrix&)>& sink) {
  const Index total = cifar_image_count(batch);
  const Index count = max_images > 0 ? std::min(max_images, total) : total;
  std::ifstream in(batch, std::ios::binary);
  if (!in) throw InputError("cannot open CIFAR batch: " + batch.string());
  CifarRecord rec;
  for (Index i = 0; i < count; ++i) {
    if (!in.read(reinterpret_cast<char*>(rec.data()), kCifarRecordBytes))
      throw FormatError(batch.string() + ": truncated record " + std::to_string(i));
    sink(image_patches(cifar_gray(rec, gray)));
  }
}

Index write_batch_patches(const std::filesystem::path& batch, const std::filesystem::path& out, GrayMode gray,
                          Index max_images) {
  const Index total = cifar_image_count(batch);
  const Index count = max_images > 0 ? std::min(max_images, total) : total;
  ContainerWriter w(out, kPatchDim, count * kPatchesPerImage);
  for_each_image_patches(batch, gray, count, [&](const Matrix& block) {
    for (Index j = 0; j < block.cols(); ++j) w.append(block.col(j).data());
  });
  w.close();
  return w.written();
}

Matrix align_signs(const Matrix& d) {
  Matrix out = d;
  for (Index j = 1; j < out.cols(); ++j)
    if (out.col(j).dot(out.col(0)) < 0.0) out.col(j) *= -1.0;
  return out;
}

namespace {

std::string pgm_header(Index w, Index h) { return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n"; }

std::uint8_t gray_level(double v, double lo, double hi) {
  if (!(hi > lo)) return 128;
  return static_cast<std::uint8_t>(std::lround(255.0 * (v - lo) / (hi - lo)));
}

}  // namespace

std::string component_pgm(const Vector& component, Index side, Index scale) {
  if (component.size() != side * side || scale < 1) throw InputError("component_pgm: size mismatch");
  const double lo = component.minCoeff(), hi = component.maxCoeff();
  const Index w = side * scale;
  std::string out = pgm_header(w, w);
  for (Index y = 0; y < w; ++y)
    for (Index x = 0; x < w; ++x) out.push_back(static_cast<char>(gray_level(component((y / scale) * side + x / scale), lo, hi)));
  return out;
}

std::string components_montage_pgm(const Matrix& d, Index side, Index per_row, Index scale) {
  if (d.rows() != side * side || per_row < 1 || scale < 1) throw InputError("components_montage_pgm: size mismatch");
  const Index k = d.cols(), rows = (k + per_row - 1) / per_row, tile = side * scale + 1;
  const Index w = per_row * tile + 1, h = rows * tile + 1;
  std::string pixels(static_cast<std::size_t>(w * h), static_cast<char>(255));
  for (Index i = 0; i < k; ++i) {
    const Vector c = d.col(i);
    const double lo = c.minCoeff(), hi = c.maxCoeff();
    const Index ox = (i % per_row) * tile + 1, oy = (i / per_row) * tile + 1;
    for (Index y = 0; y < side * scale; ++y)
      for (Index x = 0; x < side * scale; ++x)
        pixels[static_cast<std::size_t>((oy + y) * w + ox + x)] =
            static_cast<char>(gray_level(c((y / scale) * side + x / scale), lo, hi));
  }
  return pgm_header(w, h) + pixels;
}

}  // namespace oica
