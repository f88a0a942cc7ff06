#pragma once

#include <filesystem>

#include "json.hpp"

namespace vta {

/// Hardware parameters of the accelerator.
///
/// INP and WGT capacities are counted in bs x bs blocks, ACC capacity in
/// length-bs vectors. `acc_size` must be a multiple of `bs` so that the
/// accumulator can be reasoned about in whole blocks.
struct VtaConfig {
  int bs = 16;
  int inp_size = 2048;
  int wgt_size = 1024;
  int acc_size = 2048;

  /// bs=16, INP 2048 blocks, WGT 1024 blocks, ACC 2048 vectors.
  static VtaConfig defaults() { return {}; }
  /// Tiny buffers that force partitioning on small fixtures.
  static VtaConfig desk() { return {2, 4, 4, 8}; }

  int acc_blocks() const { return acc_size / bs; }

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  friend bool operator==(const VtaConfig&, const VtaConfig&) = default;
};

VtaConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const VtaConfig& c);
VtaConfig load_config(const std::filesystem::path& path);

}  // namespace vta
