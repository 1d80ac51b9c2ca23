#include <doctest.h>

#include "oica/errors.hpp"
#include "oica/io.hpp"
#include "oica/random.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <vector>

using namespace oica;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "oica_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<unsigned char> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& p, const std::vector<unsigned char>& b) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("container layout is byte-exact") {
  Matrix m(2, 3);
  m << 1.0, -2.0, 0.5, 3.0, 0.0, -0.25;
  const fs::path p = scratch("layout.oica");
  write_container(p, m);
  const auto b = bytes_of(p);
  REQUIRE(b.size() == kContainerHeaderBytes + 6 * 8);
  CHECK(std::memcmp(b.data(), "OICA", 4) == 0);
  CHECK(b[4] == 1);
  // rows = 2, cols = 3, little endian
  CHECK(b[5] == 2);
  for (int i = 6; i < 13; ++i) CHECK(b[static_cast<std::size_t>(i)] == 0);
  CHECK(b[13] == 3);
  // Column-major: second value is m(1, 0) = 3.0 = 0x4008000000000000.
  const unsigned char three[8] = {0, 0, 0, 0, 0, 0, 0x08, 0x40};
  CHECK(std::memcmp(b.data() + kContainerHeaderBytes + 8, three, 8) == 0);
  // -2.0 = 0xC000000000000000
  CHECK(b[kContainerHeaderBytes + 16 + 7] == 0xC0);
}

TEST_CASE("container round trip preserves every bit") {
  Rng rng(1);
  Matrix m = standard_normal(5, 7, rng);
  m(0, 0) = std::numeric_limits<double>::denorm_min();
  m(1, 1) = -0.0;
  m(2, 2) = std::numeric_limits<double>::infinity();
  m(3, 3) = std::numeric_limits<double>::quiet_NaN();
  const fs::path p = scratch("roundtrip.oica");
  write_container(p, m);
  const Matrix r = read_container(p);
  REQUIRE(r.rows() == 5);
  REQUIRE(r.cols() == 7);
  CHECK(std::memcmp(r.data(), m.data(), sizeof(double) * 35) == 0);

  const Matrix cols = read_container_columns(p, {6, 0, 6});
  CHECK(cols.col(0) == m.col(6));
  CHECK(std::signbit(cols(1, 1)) == std::signbit(m(1, 0)));
  CHECK_THROWS_AS(read_container_columns(p, {7}), InputError);

  write_container(scratch("empty.oica"), Matrix(0, 0));
  CHECK(read_container(scratch("empty.oica")).size() == 0);
}

TEST_CASE("container errors") {
  const fs::path missing = scratch("does_not_exist.oica");
  fs::remove(missing);
  try {
    read_container(missing);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
  }

  Rng rng(2);
  const fs::path p = scratch("good.oica");
  write_container(p, standard_normal(3, 4, rng));
  auto b = bytes_of(p);

  auto truncated = b;
  truncated.resize(b.size() - 3);
  write_bytes(scratch("trunc.oica"), truncated);
  CHECK_THROWS_AS(read_container(scratch("trunc.oica")), FormatError);

  auto magic = b;
  magic[0] = 'X';
  write_bytes(scratch("magic.oica"), magic);
  CHECK_THROWS_AS(read_container(scratch("magic.oica")), FormatError);

  auto version = b;
  version[4] = 2;
  write_bytes(scratch("version.oica"), version);
  CHECK_THROWS_AS(read_container(scratch("version.oica")), FormatError);

  auto huge = b;
  huge[20] = 0xff;  // cols with the top byte set
  write_bytes(scratch("huge.oica"), huge);
  CHECK_THROWS_AS(read_container(scratch("huge.oica")), FormatError);

  write_bytes(scratch("short.oica"), {'O', 'I'});
  CHECK_THROWS_AS(read_container_header(scratch("short.oica")), FormatError);
}

TEST_CASE("streaming writer matches the one-shot writer") {
  Rng rng(3);
  const Matrix m = standard_normal(4, 9, rng);
  write_container(scratch("a.oica"), m);
  {
    ContainerWriter w(scratch("b.oica"), 4, 9);
    for (Index j = 0; j < 9; ++j) w.append(m.col(j).data());
    w.close();
  }
  CHECK(bytes_of(scratch("a.oica")) == bytes_of(scratch("b.oica")));

  ContainerWriter w(scratch("c.oica"), 4, 2);
  w.append(m.col(0).data());
  CHECK_THROWS_AS(w.close(), InputError);
}

TEST_CASE("csv export round trip") {
  Rng rng(4);
  const Matrix m = standard_normal(3, 5, rng);
  write_csv(scratch("m.csv"), m);
  const Matrix r = read_csv(scratch("m.csv"));
  CHECK(r == m);  // 17 significant digits round-trip doubles exactly
  CHECK(read_matrix(scratch("m.csv")) == m);

  std::ofstream(scratch("ragged.csv")) << "1,2\n3\n";
  CHECK_THROWS_AS(read_csv(scratch("ragged.csv")), FormatError);
  std::ofstream(scratch("text.csv")) << "1,abc\n";
  CHECK_THROWS_AS(read_csv(scratch("text.csv")), FormatError);
}

TEST_CASE("fnv1a64 reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}
