#include "vta/blocking.hpp"

#include <algorithm>

#include "vta/error.hpp"

namespace vta {

BlockMatrix to_blocks(const Matrix& m, int bs) {
  if (bs <= 0 || m.rows % bs != 0 || m.cols % bs != 0) {
    throw ShapeError(std::to_string(m.rows) + "x" + std::to_string(m.cols) + " matrix is not divisible into " +
                     std::to_string(bs) + "x" + std::to_string(bs) + " blocks");
  }
  BlockMatrix out{m.rows / bs, m.cols / bs, bs, {}};
  out.blocks.reserve(static_cast<std::size_t>(out.block_rows) * out.block_cols);
  for (int i = 0; i < out.block_rows; ++i) {
    for (int j = 0; j < out.block_cols; ++j) {
      Block b(bs);
      for (int u = 0; u < bs; ++u) {
        for (int v = 0; v < bs; ++v) b.at(u, v) = m.at(i * bs + u, j * bs + v);
      }
      out.blocks.push_back(std::move(b));
    }
  }
  return out;
}

Matrix from_blocks(const BlockMatrix& b) {
  Matrix m(b.block_rows * b.bs, b.block_cols * b.bs);
  for (int i = 0; i < b.block_rows; ++i) {
    for (int j = 0; j < b.block_cols; ++j) {
      const auto& blk = b.at(i, j);
      for (int u = 0; u < b.bs; ++u) {
        for (int v = 0; v < b.bs; ++v) m.at(i * b.bs + u, j * b.bs + v) = blk.at(u, v);
      }
    }
  }
  return m;
}

BlockIndex matrix_to_block_index(int i, int j, int bs, int alpha, int beta) {
  if (i < 0 || j < 0 || i >= alpha * bs || j >= beta * bs) {
    throw OutOfRangeError("element (" + std::to_string(i) + ", " + std::to_string(j) + ") outside a " +
                          std::to_string(alpha * bs) + "x" + std::to_string(beta * bs) + " matrix");
  }
  return {i / bs * beta + j / bs, i % bs, j % bs};
}

std::vector<GemmTriple> expand_bgemm(BlockShape s) {
  std::vector<GemmTriple> out;
  out.reserve(static_cast<std::size_t>(s.triples()));
  for (int i = 0; i < s.alpha; ++i) {
    for (int j = 0; j < s.beta; ++j) {
      for (int k = 0; k < s.lambda; ++k) {
        out.push_back({i * s.beta + j, i * s.lambda + k, k * s.beta + j});
      }
    }
  }
  return out;
}

ScalarGemm expand_bgemm_scalar(BlockShape shape, std::int32_t b, int bs) {
  ScalarGemm out{Block(bs), expand_bgemm(shape)};
  for (int u = 0; u < bs; ++u) out.diagonal.at(u, u) = b;
  for (auto& t : out.triples) t.m = kDiagonalBlock;
  return out;
}

std::vector<AluPair> expand_balu(AluOpcode op, int beta, std::optional<std::int32_t> scalar) {
  std::vector<AluPair> out;
  for (int i = 0; i < beta; ++i) {
    if (scalar) {
      out.push_back({op, i, AluOperand::Immediate, 0, *scalar});
    } else {
      out.push_back({op, i, AluOperand::Vector, i, 0});
    }
  }
  return out;
}

std::vector<std::vector<AluPair>> expand_add_acc(int alpha, int beta, int bs) {
  std::vector<std::vector<AluPair>> rows;
  for (int r = 0; r < alpha * bs; ++r) {
    auto row = expand_balu(AluOpcode::Add, beta, std::nullopt);
    for (auto& pair : row) {
      pair.dst += r * beta;
      pair.src = pair.dst;
      pair.operand = AluOperand::Addend;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<AluPair> expand_alu_decls(const std::vector<AluDecl>& decls) {
  std::vector<AluPair> out;
  for (const auto& d : decls) {
    for (int j = 0; j < d.iterations; ++j) {
      const int x = d.dst.start + j * d.dst.stride;
      if (d.immediate) {
        out.push_back({d.op, x, AluOperand::Immediate, 0, d.scalar});
      } else {
        out.push_back({d.op, x, AluOperand::Vector, d.src.start + j * d.src.stride, 0});
      }
    }
  }
  return out;
}

std::vector<AluPair> program_alu_pairs(const PaddedProgram& program) {
  const auto& alu = program.program.alu;
  if (!alu) return {};
  if (std::holds_alternative<AddAcc>(alu->body)) {
    const auto& c = program.output_shape();
    std::vector<AluPair> out;
    for (auto& row : expand_add_acc(c.block_rows(), c.block_cols(), c.bs)) {
      out.insert(out.end(), row.begin(), row.end());
    }
    return out;
  }
  return expand_alu_decls(std::get<std::vector<AluDecl>>(alu->body));
}

std::int32_t apply_alu(AluOpcode op, std::int32_t x, std::int32_t y) {
  switch (op) {
    case AluOpcode::Max: return std::max(x, y);
    case AluOpcode::Min: return std::min(x, y);
    case AluOpcode::Add: return wrap_add(x, y);
    case AluOpcode::Mul: return wrap_mul(x, y);
    case AluOpcode::Shr: return x >> (static_cast<std::uint32_t>(y) & 31u);
  }
  return x;
}

}  // namespace vta
