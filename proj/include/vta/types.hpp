#pragma once

#include <cstdint>
#include <string_view>

namespace vta {

/// Block counts of a GEMM: A is alpha x lambda blocks, B lambda x beta,
/// C alpha x beta.
struct BlockShape {
  int alpha = 1;
  int lambda = 1;
  int beta = 1;

  long long triples() const { return static_cast<long long>(alpha) * lambda * beta; }
  friend bool operator==(const BlockShape&, const BlockShape&) = default;
};

enum class AluOpcode : std::uint8_t { Max = 0, Min = 1, Add = 2, Mul = 3, Shr = 4 };

std::string_view to_string(AluOpcode op);

}  // namespace vta
