#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "vta/blocking.hpp"
#include "vta/config.hpp"

namespace vta {

/// The atomic operations executed in one offload.
struct Partition {
  std::vector<GemmTriple> triples;
  std::vector<AluPair> alu_pairs;

  std::set<int> distinct_inp() const;
  std::set<int> distinct_wgt() const;
  std::set<int> distinct_acc() const;  // output blocks
  /// ACC vectors an ALU partition keeps resident: destinations and vector
  /// sources of the output, plus addend vectors (offset past the output).
  int alu_acc_vectors() const;
};

struct OffloadPlan {
  std::vector<Partition> partitions;
  int strategy = 1;
  BlockShape shape;
};

/// Whether any of A, B or C overflows its buffer.
bool needs_partitioning(BlockShape shape, const VtaConfig& config);

/// Splits the block GEMM into capacity-respecting offloads.
///
///  1: one output block per partition, k split into chunks when a row of A
///     or a column of B overflows.
///  2: square t x t tiles of C with t x t operand tiles, t^2 bounded by
///     every buffer; edge tiles are rectangular.
///  3: a column slice of C from a panel of A and a column slice of B.
///  4: a row slice of C from a row slice of A and a panel of B.
///
/// Throws PlanError for an unknown strategy.
OffloadPlan plan_gemm(BlockShape shape, int strategy, const VtaConfig& config);

struct AluPlan {
  bool row_wise = false;
  std::vector<Partition> partitions;
};

/// Groups ALU vector ops into offloads. If every destination is only
/// touched by immediate ops and never read as a source, vectors are
/// processed whole, in ascending runs that fit ACC. Otherwise the op
/// sequence is cut, in order, into maximal slices that fit ACC.
AluPlan plan_alu(const std::vector<AluPair>& pairs, const VtaConfig& config);

struct PlanViolation {
  enum class Kind { Cover, Disjoint, InpCapacity, WgtCapacity, AccCapacity };
  Kind kind;
  int partition = -1;
  std::string detail;
};

std::string to_string(PlanViolation::Kind kind);

/// Checks cover, disjointness and per-buffer distinct-block capacity.
std::optional<PlanViolation> validate_plan(const OffloadPlan& plan, BlockShape shape, const VtaConfig& config);

/// Checks that every ALU op appears exactly once, in an order that keeps
/// its dependencies, and that each partition fits ACC.
std::optional<PlanViolation> validate_alu_plan(const AluPlan& plan, const std::vector<AluPair>& pairs,
                                               const VtaConfig& config);

/// `--emit-plan` dump: partitions as arrays of [l, p, m] triples.
nlohmann::json plan_to_json(const OffloadPlan& plan);
nlohmann::json alu_plan_to_json(const AluPlan& plan);

}  // namespace vta
