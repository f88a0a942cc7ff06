#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vta/codegen.hpp"
#include "vta/ir.hpp"
#include "vta/matrix.hpp"
#include "vta/partition.hpp"
#include "vta/simulator.hpp"

namespace vta {

using MatrixSet = std::map<std::string, Matrix>;

struct LayerPlan {
  PaddedProgram program;
  int strategy = 1;
  std::optional<OffloadPlan> gemm;
  AluPlan alu;
};

/// Pads, plans and validates both plans (PlanError on a violation). The
/// override wins over the program's STRATEGY, which defaults to 1.
LayerPlan plan_layer(const IrProgram& program, const VtaConfig& config, std::optional<int> strategy = std::nullopt);

struct Compiled {
  LayerPlan plan;
  DramImage image;
  Lowered lowered;
  StreamStats stats;

  int partitions() const { return lowered.fused ? 1 : lowered.gemm_partitions + lowered.alu_partitions; }
};

/// Lowers a plan against an image that already holds its layer.
Lowered lower_layer(const LayerPlan& plan, const DramImage& image, int layer);

Compiled compile_program(const IrProgram& program, const VtaConfig& config,
                         std::optional<int> strategy = std::nullopt);

/// Reads every File matrix, resolving paths against `base_dir`.
MatrixSet load_file_matrices(const IrProgram& program, const std::filesystem::path& base_dir);

enum class InputRange { Int8, Int32 };

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, InputRange range);

/// Random data for the matrices of the given sources, in declaration order.
MatrixSet random_matrices(const IrProgram& program, std::mt19937_64& rng, InputRange range, bool include_files);

/// Places the layer's non-output matrices (and the scalar diagonal block).
void place_layer(std::vector<std::int32_t>& dram, const DramImage& image, int layer, const PaddedProgram& program,
                 const MatrixSet& matrices);

/// Writes b*I into the layer's diagonal region when the GEMM is scalar.
void place_diagonal(std::vector<std::int32_t>& dram, const DramImage& image, int layer, const PaddedProgram& program);

/// Runs a compiled single-layer program on the given data.
Matrix simulate(const Compiled& compiled, const MatrixSet& matrices, const TraceOptions& trace = {});

/// "AxLxB" in blocks. Throws SyntaxError.
BlockShape parse_shape(const std::string& text);

/// GEMM-only program with A of alpha x lambda blocks and B of lambda x beta.
IrProgram synthetic_gemm(BlockShape shape, int bs);

}  // namespace vta
