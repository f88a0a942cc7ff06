#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vta/codegen.hpp"
#include "vta/config.hpp"
#include "vta/dram.hpp"

namespace vta {

/// Instruction records are 32 bytes, little-endian:
///
///   u8  opcode    0 LOAD, 1 GEMM, 2 ALU, 3 STORE
///   u8  unit      LOAD: buffer; ALU: ALU opcode; otherwise 0
///   u16 flags     bit0: uop of the previous instruction
///                 bit1: further items of the previous op
///                 bit2: vector items; bit3: immediate ALU
///   u32 f0..f3    LOAD/STORE: region, first slot, width, height
///                 GEMM: acc slot, inp slot, wgt slot, 0
///                 ALU: dst slot, src slot, immediate, 0
///   u64 offset    LOAD/STORE: first item index in the region grid
///   u32 reserved
///
/// One LOAD/STORE record is one coalesced run; GEMM and ALU get one
/// record per uop. Records without bit0 are the instruction count.
inline constexpr std::size_t kRecordBytes = 32;

std::vector<std::uint8_t> encode_stream(const OpStream& stream, const DramImage& image);
OpStream decode_stream(const std::vector<std::uint8_t>& bytes, const DramImage& image, int bs);

/// Everything `vtac run` needs to execute one compiled layer.
struct ArtifactBundle {
  std::string name;
  VtaConfig config;
  DramImage image;
  OpStream stream;
  std::vector<std::int32_t> weights;  // weight regions, padded, in region order
  std::vector<std::int32_t> biases;   // bias regions, same layout

  friend bool operator==(const ArtifactBundle&, const ArtifactBundle&) = default;
};

/// Collects weight and bias regions of `dram` into a bundle.
ArtifactBundle make_bundle(std::string name, const VtaConfig& config, DramImage image, OpStream stream,
                           const std::vector<std::int32_t>& dram);

/// Writes instructions<NAME>.bin, weight<NAME>.bin, bias<NAME>.bin and
/// dram_layout<NAME>.json into `dir`.
void write_artifacts(const std::filesystem::path& dir, const ArtifactBundle& bundle);

/// Reads the single artifact set in `dir`. Throws IoError.
ArtifactBundle read_artifacts(const std::filesystem::path& dir);

/// DRAM with weights, biases and the given input regions filled in. Inputs
/// are the layer's logical input matrices in region order, concatenated.
std::vector<std::int32_t> initial_dram(const ArtifactBundle& bundle, const std::vector<std::int32_t>& inputs);

}  // namespace vta
