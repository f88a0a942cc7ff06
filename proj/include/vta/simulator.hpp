#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "vta/codegen.hpp"
#include "vta/config.hpp"
#include "vta/dram.hpp"

namespace vta {

struct TraceOptions {
  std::ostream* sink = nullptr;  // JSON lines, one per instruction
  bool digests = false;
};

struct ExecutionTrace {
  std::size_t executed = 0;
  long long loads = 0;
  long long gemms = 0;
  long long alus = 0;
  long long stores = 0;
};

/// DRAM plus the three on-chip buffers. Slots that were never written are
/// poisoned: reading one raises ExecutionError.
class Machine {
 public:
  Machine(const VtaConfig& config, const DramImage& image, std::vector<std::int32_t> dram);

  /// Applies one op. Errors carry the index of the op within the run.
  void step(const VtaOp& op);

  const std::vector<std::int32_t>& dram() const { return dram_; }
  std::vector<std::int32_t> take_dram() { return std::move(dram_); }
  std::size_t executed() const { return executed_; }

  std::int32_t acc(int slot, int e) const { return acc_[static_cast<std::size_t>(slot) * bs_ + e]; }
  bool acc_valid(int slot) const { return acc_valid_[slot]; }

  /// 64-bit FNV-1a over a buffer's contents, or over DRAM for nullopt.
  std::uint64_t digest(std::optional<Buffer> buffer) const;

 private:
  [[noreturn]] void fail(const std::string& what) const;
  const Region& region(int index) const;
  long long element(const Region& r, long long row, long long col) const { return r.offset + row * r.padded_cols + col; }

  void load(const LoadOp& op);
  void gemm(const GemmOp& op);
  void alu(const AluOp& op);
  void store(const StoreOp& op);

  VtaConfig config_;
  const DramImage& image_;
  int bs_;
  std::vector<std::int32_t> dram_;
  std::vector<std::int32_t> inp_;
  std::vector<std::int32_t> wgt_;
  std::vector<std::int32_t> acc_;
  std::vector<char> inp_valid_;
  std::vector<char> wgt_valid_;
  std::vector<char> acc_valid_;
  std::size_t executed_ = 0;
};

struct RunResult {
  std::vector<std::int32_t> dram;
  ExecutionTrace trace;
};

RunResult run(const OpStream& stream, const DramImage& image, const VtaConfig& config, std::vector<std::int32_t> dram,
              const TraceOptions& options = {});

/// Linear scan: every slot read by GEMM, ALU or STORE was filled earlier by
/// a LOAD (or a GEMM/ALU into an already-filled ACC slot), and every slot
/// and item index is in range. Throws ExecutionError at the first problem.
void verify_residency(const OpStream& stream, const DramImage& image, const VtaConfig& config);

}  // namespace vta
