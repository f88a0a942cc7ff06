#pragma once

// Small convolutional networks written to disk, with expected outputs
// computed by direct convolution (no im2row, no compiler code).

#include <filesystem>
#include <random>

#include "vta/chain.hpp"

namespace vta::testing {

struct NetworkCase {
  std::filesystem::path manifest;
  std::filesystem::path input_file;  // CHW int32
  Tensor input;
  Matrix expected;
};

/// conv3x3 (pad 1) + ReLU, then a fully connected layer.
NetworkCase two_layer_network(const std::filesystem::path& dir, int bs, std::mt19937_64& rng);

/// Two convolutions of the same input, concatenated by channel and fed to a
/// 1x1 convolution with bias.
NetworkCase branching_network(const std::filesystem::path& dir, int bs, std::mt19937_64& rng);

/// conv + ReLU whose output feeds the next layer unchanged (shared region).
NetworkCase aliased_network(const std::filesystem::path& dir, int bs, std::mt19937_64& rng);

}  // namespace vta::testing
