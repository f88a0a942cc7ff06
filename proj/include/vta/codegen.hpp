#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "vta/dram.hpp"
#include "vta/ir.hpp"
#include "vta/partition.hpp"

namespace vta {

enum class Buffer : std::uint8_t { Inp = 0, Wgt = 1, Acc = 2 };

/// Unit moved by a LOAD or STORE. INP and WGT only hold blocks. In ACC a
/// block item spans bs consecutive vector slots.
enum class Item : std::uint8_t { Block = 0, Vector = 1 };

std::string_view to_string(Buffer b);

/// Item n of `sources` lands in slot dest_slot + n (times bs for ACC
/// blocks). Item indices are row-major in the region's block or vector grid.
struct LoadOp {
  Buffer buffer = Buffer::Inp;
  Item item = Item::Block;
  int region = 0;
  std::vector<int> sources;
  int dest_slot = 0;

  friend bool operator==(const LoadOp&, const LoadOp&) = default;
};

/// ACC vectors acc_slot .. acc_slot+bs-1 += INP block x WGT block.
struct GemmOp {
  int acc_slot = 0;
  int inp_slot = 0;
  int wgt_slot = 0;

  friend bool operator==(const GemmOp&, const GemmOp&) = default;
};

struct AluOp {
  AluOpcode op = AluOpcode::Max;
  int dst_slot = 0;
  bool immediate = false;
  int src_slot = 0;
  std::int32_t imm = 0;

  friend bool operator==(const AluOp&, const AluOp&) = default;
};

/// ACC slot slots[n] (first vector slot for blocks) goes to item dests[n].
struct StoreOp {
  Item item = Item::Vector;
  std::vector<int> slots;
  int region = 0;
  std::vector<int> dests;

  friend bool operator==(const StoreOp&, const StoreOp&) = default;
};

using VtaOp = std::variant<LoadOp, GemmOp, AluOp, StoreOp>;
using OpStream = std::vector<VtaOp>;

struct Lowered {
  OpStream stream;
  int gemm_partitions = 0;
  int alu_partitions = 0;
  bool fused = false;  // GEMM and ALU ran in the same offload
};

/// Lowers one layer. GEMM partitions run first, then ALU partitions, then
/// designated output vectors no partition touched are copied out.
Lowered lower(const PaddedProgram& program, const OffloadPlan* gemm_plan, const AluPlan& alu_plan,
              const DramImage& image, int layer);

struct StreamStats {
  long long instructions = 0;
  long long uops = 0;
  long long loads = 0;   // coalesced LOAD instructions
  long long stores = 0;  // coalesced STORE instructions

  friend bool operator==(const StreamStats&, const StreamStats&) = default;
};

/// A maximal block of items with contiguous slots whose sources form a
/// rectangle in the region grid (full rows of equal width on consecutive
/// grid rows, read row-major). One VTA 2D DMA transfer.
struct Run {
  std::size_t first = 0;  // position in the op's item list
  int width = 0;
  int height = 0;
};

/// `step` is the slot distance between consecutive items (bs for ACC blocks).
std::vector<Run> coalesce(const std::vector<int>& items, const std::vector<int>& slots, int pitch, int step);

/// instructions = LOAD/STORE runs + maximal GEMM sequences + maximal ALU
/// sequences sharing opcode and mode; uops = GEMM + ALU ops.
StreamStats count_stats(const OpStream& stream, const DramImage& image);

}  // namespace vta
