#include "oica/io.hpp"

#include "oica/errors.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <iomanip>
#include <sstream>

namespace oica {

namespace {

constexpr char kMagic[4] = {'O', 'I', 'C', 'A'};

void put_u64(unsigned char* out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out[b] = static_cast<unsigned char>(v >> (8 * b));
}

std::uint64_t get_u64(const unsigned char* in) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(in[b]) << (8 * b);
  return v;
}

void put_f64(unsigned char* out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
double get_f64(const unsigned char* in) { return std::bit_cast<double>(get_u64(in)); }

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open input file: " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open output file: " + path.string());
  return out;
}

std::vector<unsigned char> header_bytes(Index rows, Index cols) {
  std::vector<unsigned char> h(kContainerHeaderBytes);
  std::memcpy(h.data(), kMagic, 4);
  h[4] = kContainerVersion;
  put_u64(h.data() + 5, static_cast<std::uint64_t>(rows));
  put_u64(h.data() + 13, static_cast<std::uint64_t>(cols));
  return h;
}

ContainerHeader parse_header(std::ifstream& in, const std::filesystem::path& path) {
  unsigned char h[kContainerHeaderBytes];
  if (!in.read(reinterpret_cast<char*>(h), sizeof h))
    throw FormatError(path.string() + ": truncated container header");
  if (std::memcmp(h, kMagic, 4) != 0) throw FormatError(path.string() + ": not an OICA container (bad magic)");
  if (h[4] != kContainerVersion)
    throw FormatError(path.string() + ": unsupported container version " + std::to_string(h[4]));
  const std::uint64_t rows = get_u64(h + 5), cols = get_u64(h + 13);
  const std::uint64_t size = std::filesystem::file_size(path);
  // Overflow-safe check of rows * cols * 8 + header == size.
  const std::uint64_t payload = size - kContainerHeaderBytes;
  if (rows != 0 && (cols > payload / 8 / rows || rows * cols * 8 != payload))
    throw FormatError(path.string() + ": payload size does not match " + std::to_string(rows) + " x " +
                      std::to_string(cols));
  if (rows == 0 && payload != 0) throw FormatError(path.string() + ": trailing bytes after empty matrix");
  return {static_cast<Index>(rows), static_cast<Index>(cols)};
}

}  // namespace

ContainerHeader read_container_header(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  return parse_header(in, path);
}

Matrix read_container(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  const ContainerHeader h = parse_header(in, path);
  Matrix m(h.rows, h.cols);
  std::vector<unsigned char> col(static_cast<std::size_t>(h.rows) * 8);
  for (Index j = 0; j < h.cols; ++j) {
    if (!in.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(col.size())))
      throw FormatError(path.string() + ": truncated payload");
    for (Index i = 0; i < h.rows; ++i) m(i, j) = get_f64(col.data() + 8 * i);
  }
  return m;
}

Matrix read_container_columns(const std::filesystem::path& path, const std::vector<Index>& columns) {
  std::ifstream in = open_input(path);
  const ContainerHeader h = parse_header(in, path);
  Matrix m(h.rows, static_cast<Index>(columns.size()));
  std::vector<unsigned char> col(static_cast<std::size_t>(h.rows) * 8);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const Index j = columns[c];
    if (j < 0 || j >= h.cols) throw InputError(path.string() + ": column " + std::to_string(j) + " out of range");
    in.seekg(static_cast<std::streamoff>(kContainerHeaderBytes + col.size() * static_cast<std::size_t>(j)));
    if (!in.read(reinterpret_cast<char*>(col.data()), static_cast<std::streamsize>(col.size())))
      throw FormatError(path.string() + ": truncated payload");
    for (Index i = 0; i < h.rows; ++i) m(i, static_cast<Index>(c)) = get_f64(col.data() + 8 * i);
  }
  return m;
}

void write_container(const std::filesystem::path& path, const Matrix& m) {
  ContainerWriter w(path, m.rows(), m.cols());
  for (Index j = 0; j < m.cols(); ++j) w.append(m.col(j).data());
  w.close();
}

ContainerWriter::ContainerWriter(const std::filesystem::path& path, Index rows, Index cols)
    : path_(path), out_(open_output(path)), rows_(rows), cols_(cols), buffer_(static_cast<std::size_t>(rows) * 8) {
  if (rows < 0 || cols < 0) throw InputError("ContainerWriter: negative dimensions");
  const auto h = header_bytes(rows, cols);
  out_.write(reinterpret_cast<const char*>(h.data()), static_cast<std::streamsize>(h.size()));
}

ContainerWriter::~ContainerWriter() = default;

void ContainerWriter::append(const double* column) {
  if (written_ >= cols_) throw InputError(path_.string() + ": more columns than declared");
  for (Index i = 0; i < rows_; ++i) put_f64(buffer_.data() + 8 * i, column[i]);
  out_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
  ++written_;
}

void ContainerWriter::close() {
  out_.flush();
  if (!out_) throw InputError(path_.string() + ": write failed");
  out_.close();
  if (written_ != cols_)
    throw InputError(path_.string() + ": " + std::to_string(written_) + " of " + std::to_string(cols_) +
                     " columns written");
}

void write_csv(const std::filesystem::path& path, const Matrix& m) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) os << (j ? "," : "") << m(i, j);
    os << '\n';
  }
  write_text(path, os.str());
}

Matrix read_csv(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      while (p < end && *p == ' ') ++p;
      double v = 0.0;
      const auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) throw FormatError(path.string() + ":" + std::to_string(lineno) + ": not a number");
      row.push_back(v);
      p = next;
      while (p < end && *p == ' ') ++p;
      if (p == end) break;
      if (*p != ',') throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected ','");
      ++p;
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size()), c = rows.empty() ? 0 : static_cast<Index>(rows[0].size());
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

Matrix read_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_csv(path) : read_container(path);
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out = open_output(path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InputError("write failed: " + path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace oica
