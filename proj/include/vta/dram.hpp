#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "vta/ir.hpp"
#include "vta/matrix.hpp"

namespace vta {

enum class RegionRole : std::uint8_t { Input, Weight, Bias, Output, Scratch };

std::string to_string(RegionRole role);

/// A padded row-major matrix in DRAM. Offsets and lengths count int32
/// elements.
struct Region {
  std::string name;
  long long offset = 0;
  long long length = 0;
  RegionRole role = RegionRole::Input;
  int layer = 0;
  int rows = 0;
  int cols = 0;
  int padded_rows = 0;
  int padded_cols = 0;
  int bs = 1;

  /// Items per grid row, for both blocks and vectors.
  int pitch() const { return padded_cols / bs; }
  int blocks() const { return (padded_rows / bs) * pitch(); }
  int vectors() const { return padded_rows * pitch(); }

  friend bool operator==(const Region&, const Region&) = default;
};

/// Scratch regions hold one layer's partial sums and start zeroed.
struct DramImage {
  std::vector<Region> regions;
  /// Per layer: matrix name -> region index. "#scratch" and "#diag" name
  /// the accumulator spill area and the scalar-GEMM block.
  std::vector<std::map<std::string, int>> bindings;
  long long size = 0;

  int region_of(int layer, const std::string& matrix) const;
  const Region& region(int layer, const std::string& matrix) const { return regions[region_of(layer, matrix)]; }

  friend bool operator==(const DramImage&, const DramImage&) = default;
};

inline const std::string kScratch = "#scratch";
inline const std::string kDiagonal = "#diag";

/// Layer `layer`'s matrix `matrix` reuses the region of `from_layer`'s
/// output instead of getting its own.
struct RegionAlias {
  int layer = 0;
  std::string matrix;
  int from_layer = 0;
};

/// Lays out layers in order; within a layer, matrices in declaration order
/// (output last), then the scalar diagonal block, then scratch. Every region
/// starts on a bs*bs boundary. Throws ShapeError when an alias disagrees on
/// padded shape.
DramImage allocate_dram(const std::vector<PaddedProgram>& programs, const std::vector<RegionAlias>& aliases = {});

nlohmann::json dram_to_json(const DramImage& image);
DramImage dram_from_json(const nlohmann::json& j);

/// Writes the logical matrix into its padded region; padding becomes zero.
void place_matrix(std::vector<std::int32_t>& dram, const Region& region, const Matrix& m);
/// Reads back the logical part of a region.
Matrix extract_matrix(const std::vector<std::int32_t>& dram, const Region& region);
/// Zeroes the padding rows and columns of a region.
void clear_padding(std::vector<std::int32_t>& dram, const Region& region);

}  // namespace vta
