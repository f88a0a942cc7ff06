#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "vta/ir.hpp"
#include "vta/matrix.hpp"
#include "vta/types.hpp"

namespace vta {

/// A bs x bs tile, row-major.
struct Block {
  int bs = 0;
  std::vector<std::int32_t> values;

  explicit Block(int edge = 0) : bs(edge), values(static_cast<std::size_t>(edge) * edge, 0) {}
  std::int32_t& at(int u, int v) { return values[static_cast<std::size_t>(u) * bs + v]; }
  std::int32_t at(int u, int v) const { return values[static_cast<std::size_t>(u) * bs + v]; }

  friend bool operator==(const Block&, const Block&) = default;
};

/// Matrix viewed as block_rows x block_cols tiles; block k sits at
/// (k / block_cols, k % block_cols).
struct BlockMatrix {
  int block_rows = 0;
  int block_cols = 0;
  int bs = 0;
  std::vector<Block> blocks;

  const Block& at(int i, int j) const { return blocks[static_cast<std::size_t>(i) * block_cols + j]; }
};

/// Requires rows and cols divisible by bs (ShapeError otherwise).
BlockMatrix to_blocks(const Matrix& m, int bs);
Matrix from_blocks(const BlockMatrix& b);

struct BlockIndex {
  int k = 0;
  int u = 0;
  int v = 0;
  friend bool operator==(const BlockIndex&, const BlockIndex&) = default;
};

/// (i, j) -> (floor(i/bs)*beta + floor(j/bs), (i mod bs, j mod bs)) for a
/// matrix of alpha x beta blocks. Throws OutOfRangeError.
BlockIndex matrix_to_block_index(int i, int j, int bs, int alpha, int beta);

/// One atomic GEMM: ACC block l += INP block p x WGT block m.
struct GemmTriple {
  int l = 0;
  int p = 0;
  int m = 0;
  auto operator<=>(const GemmTriple&) const = default;
};

/// All triples of a block GEMM, in lexicographic (i, j, k) order.
std::vector<GemmTriple> expand_bgemm(BlockShape shape);

/// WGT index used when every triple multiplies by the same diagonal block.
inline constexpr int kDiagonalBlock = -1;

struct ScalarGemm {
  Block diagonal;                    // b * I
  std::vector<GemmTriple> triples;   // m == kDiagonalBlock
};

ScalarGemm expand_bgemm_scalar(BlockShape shape, std::int32_t b, int bs);

enum class AluOperand : std::uint8_t { Vector, Immediate, Addend };

/// One atomic ALU op on ACC vector `dst`. `src` is a vector of the same
/// matrix (Vector), a vector of the second ACC matrix (Addend), or unused.
struct AluPair {
  AluOpcode op = AluOpcode::Max;
  int dst = 0;
  AluOperand operand = AluOperand::Vector;
  int src = 0;
  std::int32_t imm = 0;

  friend bool operator==(const AluPair&, const AluPair&) = default;
};

/// X := op(X, Y) (or op(X, c)) on vectors of beta segments: segment i of X
/// pairs with segment i of Y.
std::vector<AluPair> expand_balu(AluOpcode op, int beta, std::optional<std::int32_t> scalar);

/// Per padded row r < alpha*bs, the beta ADD pairs covering that row.
std::vector<std::vector<AluPair>> expand_add_acc(int alpha, int beta, int bs);

/// Expands ALU lines into vector ops in execution order.
std::vector<AluPair> expand_alu_decls(const std::vector<AluDecl>& decls);

/// Every ALU vector op a program performs, in execution order.
std::vector<AluPair> program_alu_pairs(const PaddedProgram& program);

// Two's-complement wraparound arithmetic.
inline std::int32_t wrap_add(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}
inline std::int32_t wrap_mul(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
}

/// Element-wise ALU semantics. SHR is arithmetic with the amount taken mod 32.
std::int32_t apply_alu(AluOpcode op, std::int32_t x, std::int32_t y);

}  // namespace vta
