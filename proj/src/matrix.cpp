#include "vta/matrix.hpp"

#include <bit>
#include <fstream>

#include "vta/error.hpp"

namespace vta {

namespace {

static_assert(std::endian::native == std::endian::little,
              "int32 files are read by memcpy; big-endian hosts need byte swapping");

}  // namespace

std::vector<std::int32_t> read_int32_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size % 4 != 0) {
    throw IoError(path.string() + ": size " + std::to_string(size) + " is not a multiple of 4");
  }
  std::vector<std::int32_t> values(size / 4);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(size));
  if (!in) throw IoError("short read on " + path.string());
  return values;
}

void write_int32_file(const std::filesystem::path& path, std::span<const std::int32_t> values) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(std::int32_t)));
  if (!out) throw IoError("write failed on " + path.string());
}

Matrix read_matrix_bin(const std::filesystem::path& path, int rows, int cols) {
  auto values = read_int32_file(path);
  const auto expected = static_cast<std::size_t>(rows) * cols;
  if (values.size() != expected) {
    throw IoError(path.string() + ": holds " + std::to_string(values.size()) +
                  " int32 values, expected " + std::to_string(expected));
  }
  Matrix m;
  m.rows = rows;
  m.cols = cols;
  m.data = std::move(values);
  return m;
}

void write_matrix_bin(const std::filesystem::path& path, const Matrix& m) {
  write_int32_file(path, m.data);
}

}  // namespace vta
