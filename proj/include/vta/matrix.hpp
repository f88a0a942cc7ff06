#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace vta {

/// Dense row-major int32 matrix.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<std::int32_t> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0) {}

  std::int32_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  std::int32_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

/// Raw little-endian int32, row-major, no header. File size must be rows*cols*4.
Matrix read_matrix_bin(const std::filesystem::path& path, int rows, int cols);
void write_matrix_bin(const std::filesystem::path& path, const Matrix& m);

std::vector<std::int32_t> read_int32_file(const std::filesystem::path& path);
void write_int32_file(const std::filesystem::path& path, std::span<const std::int32_t> values);

}  // namespace vta
