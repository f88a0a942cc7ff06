#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "vta/codegen.hpp"
#include "vta/config.hpp"
#include "vta/matrix.hpp"
#include "vta/simulator.hpp"

namespace vta {

/// CHW int32 tensor (batch 1).
struct Tensor {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<std::int32_t> data;

  Tensor() = default;
  Tensor(int c, int h, int w) : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0) {}
  std::int32_t& at(int c, int h, int w) { return data[(static_cast<std::size_t>(c) * height + h) * width + w]; }
  std::int32_t at(int c, int h, int w) const { return data[(static_cast<std::size_t>(c) * height + h) * width + w]; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct Im2RowParams {
  int channels = 1;
  int height = 1;
  int width = 1;
  int kernel_h = 1;
  int kernel_w = 1;
  int stride_h = 1;
  int stride_w = 1;
  int pad_h = 0;
  int pad_w = 0;

  int out_h() const { return (height + 2 * pad_h - kernel_h) / stride_h + 1; }
  int out_w() const { return (width + 2 * pad_w - kernel_w) / stride_w + 1; }
  int rows() const { return out_h() * out_w(); }
  int cols() const { return channels * kernel_h * kernel_w; }
};

/// Row r is output position (r / out_w, r % out_w); column
/// (c * kernel_h + i) * kernel_w + j holds x(c, oh*stride_h - pad_h + i,
/// ow*stride_w - pad_w + j), zero outside the tensor. Throws ShapeError.
Matrix im2row(const Tensor& t, const Im2RowParams& p);

/// tensor(c, h, w) = m(h*width + w, c). Throws ShapeError.
Tensor row2tensor(const Matrix& m, int channels, int height, int width);

/// 1 x CHW row in c, h, w order.
Matrix flatten(const Tensor& t);

struct ReshapeNone {};
struct ReshapeIm2Row {
  Im2RowParams params;
};
/// Layer output (H*W x C) to a 1 x CHW row.
struct ReshapeRow2Tensor {
  int channels = 1;
  int height = 1;
  int width = 1;
};
using Reshape = std::variant<ReshapeNone, ReshapeIm2Row, ReshapeRow2Tensor>;

struct ManifestLayer {
  std::string ir;  // relative to the manifest
  std::optional<int> strategy;
};

/// Moves data into `matrix` of layer `to`, starting at column `col_offset`.
/// `from` is a layer index or nullopt for the network input.
struct ManifestEdge {
  std::optional<int> from;
  int to = 0;
  std::string matrix;  // empty: the layer's only Input matrix
  Reshape reshape;
  int col_offset = 0;
};

struct NetworkManifest {
  std::vector<ManifestLayer> layers;
  std::vector<ManifestEdge> edges;
  std::array<int, 4> input_shape{1, 1, 1, 1};  // N, C, H, W
  int output = 0;
};

/// Strict parse; throws SyntaxError (bad structure) or SemanticError.
NetworkManifest parse_manifest(const nlohmann::json& j);
NetworkManifest load_manifest(const std::filesystem::path& path);

struct LayerReport {
  StreamStats stats;
  ExecutionTrace trace;
  int strategy = 1;
  int partitions = 0;
  bool aliased_input = false;
};

struct NetworkResult {
  Matrix output;
  std::vector<Matrix> layer_outputs;
  std::vector<LayerReport> layers;
  int regions = 0;  // DRAM regions other than scratch
};

struct NetworkOptions {
  std::optional<int> strategy;  // overrides every layer
  TraceOptions trace;
};

/// Runs the layers in order: gather and reshape inputs on the host, write
/// them to DRAM, execute, read the output back. Layer errors are rethrown
/// as LayerError.
NetworkResult run_network(const NetworkManifest& manifest, const std::filesystem::path& base_dir,
                          const VtaConfig& config, const Tensor& input, const NetworkOptions& options = {});

}  // namespace vta
