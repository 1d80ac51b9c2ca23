#pragma once

// Matrix files. The binary container is
//   "OICA" | version byte (1) | rows u64 LE | cols u64 LE | column-major f64 LE
// and is bit-exact across platforms. CSV is an export path (one matrix row
// per line, 17 significant digits).

#include "oica/corela.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace oica {

inline constexpr std::uint8_t kContainerVersion = 1;
inline constexpr std::size_t kContainerHeaderBytes = 4 + 1 + 8 + 8;

struct ContainerHeader {
  Index rows = 0;
  Index cols = 0;
};

/// Throws InputError (with the path) for missing files and FormatError for a
/// bad magic, unknown version or a size that does not match the header.
ContainerHeader read_container_header(const std::filesystem::path& path);
Matrix read_container(const std::filesystem::path& path);
/// Selected columns, in the given order.
Matrix read_container_columns(const std::filesystem::path& path, const std::vector<Index>& columns);
void write_container(const std::filesystem::path& path, const Matrix& m);

/// Writes a container column by column without holding the matrix.
class ContainerWriter {
 public:
  ContainerWriter(const std::filesystem::path& path, Index rows, Index cols);
  ContainerWriter(const ContainerWriter&) = delete;
  ContainerWriter& operator=(const ContainerWriter&) = delete;
  ~ContainerWriter();

  void append(const double* column);
  Index written() const noexcept { return written_; }
  /// Flushes and checks that exactly `cols` columns were appended.
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  Index rows_;
  Index cols_;
  Index written_ = 0;
  std::vector<unsigned char> buffer_;
};

void write_csv(const std::filesystem::path& path, const Matrix& m);
/// Numeric CSV without a header; all rows must have the same length.
Matrix read_csv(const std::filesystem::path& path);

/// Container unless the extension is .csv.
Matrix read_matrix(const std::filesystem::path& path);

/// Writes `text` to `path`, creating parent directories. Throws InputError
/// when the file cannot be opened.
void write_text(const std::filesystem::path& path, std::string_view text);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

}  // namespace oica
