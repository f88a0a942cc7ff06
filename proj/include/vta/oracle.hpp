#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "vta/ir.hpp"
#include "vta/matrix.hpp"

namespace vta {

/// Dense reference semantics of one program, written without the block
/// machinery: C := X + A x B (or the loaded ACC), then the ALU lines in
/// order, then the STORE selection. Vectors that are not stored read as 0.
/// `inputs` holds every non-output matrix at its declared shape.
Matrix reference_eval(const IrProgram& program, const std::map<std::string, Matrix>& inputs, int bs);

struct Divergence {
  int row = 0;
  int col = 0;
  std::int32_t simulated = 0;
  std::int32_t reference = 0;
};

struct Comparison {
  bool match = true;
  long long mismatches = 0;
  std::optional<Divergence> first;
};

/// Exact int32 comparison. Throws ShapeError when the shapes differ.
Comparison compare_bitwise(const Matrix& simulated, const Matrix& reference);

nlohmann::json comparison_to_json(const Comparison& c);

}  // namespace vta
