#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vta/config.hpp"
#include "vta/types.hpp"

namespace vta {

enum class SourceKind { Input, Output, File };

struct MatrixDecl {
  std::string name;
  int rows = 0;
  int cols = 0;
  SourceKind source = SourceKind::Input;
  std::string path;  // only for SourceKind::File

  friend bool operator==(const MatrixDecl&, const MatrixDecl&) = default;
};

/// `[[start, stride], count]`: selects items start + j*stride for j < count.
struct LoadDescriptor {
  int start = 0;
  int stride = 0;
  int count = 1;

  friend bool operator==(const LoadDescriptor&, const LoadDescriptor&) = default;
};

/// Index sequence start + j*stride.
struct IndexStride {
  int start = 0;
  int stride = 0;

  friend bool operator==(const IndexStride&, const IndexStride&) = default;
};

/// One ALU line. For immediate ops `src` is unused and `scalar` holds c.
struct AluDecl {
  AluOpcode op = AluOpcode::Max;
  bool immediate = false;
  IndexStride dst;
  IndexStride src;
  std::int32_t scalar = 0;
  int iterations = 1;

  friend bool operator==(const AluDecl&, const AluDecl&) = default;
};

struct BufferLoad {
  std::string matrix;
  std::vector<LoadDescriptor> descriptors;  // empty: whole matrix

  friend bool operator==(const BufferLoad&, const BufferLoad&) = default;
};

struct AccLoad {
  std::string matrix;
  std::vector<LoadDescriptor> descriptors;  // empty: whole matrix
  std::optional<std::string> second;        // `"ACC": ["X", "Y"]`

  friend bool operator==(const AccLoad&, const AccLoad&) = default;
};

struct GemmClause {
  std::string dst;
  std::string src;
  std::variant<std::string, std::int32_t> rhs;

  bool scalar() const { return std::holds_alternative<std::int32_t>(rhs); }
  friend bool operator==(const GemmClause&, const GemmClause&) = default;
};

struct AddAcc {
  std::string lhs;
  std::string rhs;

  friend bool operator==(const AddAcc&, const AddAcc&) = default;
};

struct AluClause {
  std::string target;
  std::variant<std::vector<AluDecl>, AddAcc> body;

  friend bool operator==(const AluClause&, const AluClause&) = default;
};

struct StoreClause {
  std::string matrix;
  std::optional<std::vector<LoadDescriptor>> vectors;  // nullopt: whole matrix

  friend bool operator==(const StoreClause&, const StoreClause&) = default;
};

/// A parsed IR document. Matrices keep declaration order with the output
/// matrix moved last.
struct IrProgram {
  std::string name;
  std::vector<MatrixDecl> matrices;
  std::optional<BufferLoad> inp;
  std::optional<BufferLoad> wgt;
  std::optional<AccLoad> acc;
  std::optional<GemmClause> gemm;
  std::optional<AluClause> alu;
  StoreClause store;
  std::optional<int> strategy;

  const MatrixDecl* find(std::string_view name) const;
  const MatrixDecl& output() const { return matrices.back(); }

  friend bool operator==(const IrProgram&, const IrProgram&) = default;
};

struct Diagnostic {
  std::string where;
  std::string message;
};

/// Parses an IR document. Throws SyntaxError or SemanticError. Non-canonical
/// key order is accepted and reported through `warnings` when given.
IrProgram parse_ir(std::string_view text, std::vector<Diagnostic>* warnings = nullptr);
IrProgram load_ir(const std::string& path, std::vector<Diagnostic>* warnings = nullptr);

/// Canonical rendering: NAME, MATRICES, LOAD, GEMM, ALU, STORE, STRATEGY.
std::string render_ir(const IrProgram& program);

/// True for strings accepted by the `hex` production.
bool is_hex_literal(std::string_view s);
bool is_identifier(std::string_view s);

/// Logical and padded extents of one matrix.
struct MatrixShape {
  int rows = 0;
  int cols = 0;
  int padded_rows = 0;
  int padded_cols = 0;
  int bs = 1;

  int block_rows() const { return padded_rows / bs; }
  int block_cols() const { return padded_cols / bs; }
  int blocks() const { return block_rows() * block_cols(); }
  /// Number of length-bs vectors; vector v covers row v / block_cols().
  int vectors() const { return padded_rows * block_cols(); }
  long long padded_elements() const { return static_cast<long long>(padded_rows) * padded_cols; }

  friend bool operator==(const MatrixShape&, const MatrixShape&) = default;
};

struct PaddedProgram {
  IrProgram program;
  VtaConfig config;
  std::map<std::string, MatrixShape> shapes;
  std::optional<BlockShape> gemm_shape;

  const MatrixShape& shape(const std::string& name) const { return shapes.at(name); }
  const MatrixShape& output_shape() const { return shapes.at(program.output().name); }
};

/// Pads every matrix to multiples of bs and checks all config-dependent
/// index ranges. Throws ShapeError / EmptyMatrixError.
PaddedProgram validate_shapes(const IrProgram& program, const VtaConfig& config);

/// Expands descriptors into the index sequence a + j*b, j < c.
std::vector<int> expand_descriptors(const std::vector<LoadDescriptor>& descriptors);

}  // namespace vta
