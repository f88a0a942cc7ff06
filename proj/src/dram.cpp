#include "vta/dram.hpp"

#include <algorithm>

#include "vta/error.hpp"

namespace vta {

std::string to_string(RegionRole role) {
  switch (role) {
    case RegionRole::Input: return "input";
    case RegionRole::Weight: return "weight";
    case RegionRole::Bias: return "bias";
    case RegionRole::Output: return "output";
    case RegionRole::Scratch: return "scratch";
  }
  return "?";
}

namespace {

RegionRole role_from_string(const std::string& s) {
  for (auto r : {RegionRole::Input, RegionRole::Weight, RegionRole::Bias, RegionRole::Output, RegionRole::Scratch}) {
    if (to_string(r) == s) return r;
  }
  throw IoError("unknown region role '" + s + "'");
}

RegionRole role_of(const IrProgram& p, const MatrixDecl& m) {
  switch (m.source) {
    case SourceKind::Input: return RegionRole::Input;
    case SourceKind::Output: return RegionRole::Output;
    case SourceKind::File: break;
  }
  if (p.acc && (p.acc->matrix == m.name || p.acc->second == m.name)) return RegionRole::Bias;
  return RegionRole::Weight;
}

long long align_up(long long v, long long a) { return (v + a - 1) / a * a; }

}  // namespace

int DramImage::region_of(int layer, const std::string& matrix) const {
  if (layer < 0 || layer >= static_cast<int>(bindings.size())) {
    throw OutOfRangeError("no layer " + std::to_string(layer) + " in the DRAM image");
  }
  const auto it = bindings[layer].find(matrix);
  if (it == bindings[layer].end()) {
    throw OutOfRangeError("layer " + std::to_string(layer) + " has no region for '" + matrix + "'");
  }
  return it->second;
}

DramImage allocate_dram(const std::vector<PaddedProgram>& programs, const std::vector<RegionAlias>& aliases) {
  DramImage image;
  image.bindings.resize(programs.size());
  auto add = [&](int layer, const std::string& key, Region r) {
    r.offset = align_up(image.size, static_cast<long long>(r.bs) * r.bs);
    image.size = r.offset + r.length;
    image.bindings[layer][key] = static_cast<int>(image.regions.size());
    image.regions.push_back(std::move(r));
  };

  for (std::size_t n = 0; n < programs.size(); ++n) {
    const auto& pp = programs[n];
    const int layer = static_cast<int>(n);
    const int bs = pp.config.bs;
    const std::string prefix = "L" + std::to_string(layer) + ".";
    for (const auto& m : pp.program.matrices) {
      const auto& s = pp.shape(m.name);
      const auto alias = std::find_if(aliases.begin(), aliases.end(), [&](const RegionAlias& a) {
        return a.layer == layer && a.matrix == m.name;
      });
      if (alias != aliases.end()) {
        if (alias->from_layer < 0 || alias->from_layer >= layer) {
          throw ShapeError("layer " + std::to_string(layer) + " aliases a region of a later layer");
        }
        const auto& src = programs[alias->from_layer];
        const int idx = image.region_of(alias->from_layer, src.program.output().name);
        const auto& r = image.regions[idx];
        if (r.padded_rows != s.padded_rows || r.padded_cols != s.padded_cols || r.bs != bs) {
          throw ShapeError("alias shape mismatch: '" + m.name + "' of layer " + std::to_string(layer) + " is " +
                           std::to_string(s.padded_rows) + "x" + std::to_string(s.padded_cols) + " padded, '" +
                           r.name + "' is " + std::to_string(r.padded_rows) + "x" + std::to_string(r.padded_cols));
        }
        image.bindings[layer][m.name] = idx;
        continue;
      }
      add(layer, m.name,
          Region{prefix + m.name, 0, s.padded_elements(), role_of(pp.program, m), layer, s.rows, s.cols,
                 s.padded_rows, s.padded_cols, bs});
    }
    if (pp.program.gemm && pp.program.gemm->scalar()) {
      add(layer, kDiagonal, Region{prefix + "diag", 0, static_cast<long long>(bs) * bs, RegionRole::Weight, layer, bs,
                                   bs, bs, bs, bs});
    }
    const auto& c = pp.output_shape();
    add(layer, kScratch,
        Region{prefix + pp.program.output().name + ".acc", 0, c.padded_elements(), RegionRole::Scratch, layer, c.rows,
               c.cols, c.padded_rows, c.padded_cols, bs});
  }
  return image;
}

nlohmann::json dram_to_json(const DramImage& image) {
  nlohmann::json regions = nlohmann::json::array();
  for (const auto& r : image.regions) {
    regions.push_back({{"name", r.name},
                       {"offset", r.offset},
                       {"length", r.length},
                       {"role", to_string(r.role)},
                       {"layer", r.layer},
                       {"rows", r.rows},
                       {"cols", r.cols},
                       {"padded_rows", r.padded_rows},
                       {"padded_cols", r.padded_cols},
                       {"bs", r.bs}});
  }
  nlohmann::json bindings = nlohmann::json::array();
  for (const auto& b : image.bindings) bindings.push_back(b);
  return {{"size", image.size}, {"regions", std::move(regions)}, {"bindings", std::move(bindings)}};
}

DramImage dram_from_json(const nlohmann::json& j) {
  try {
    DramImage image;
    image.size = j.at("size").get<long long>();
    for (const auto& r : j.at("regions")) {
      image.regions.push_back(Region{r.at("name").get<std::string>(), r.at("offset").get<long long>(),
                                     r.at("length").get<long long>(), role_from_string(r.at("role").get<std::string>()),
                                     r.at("layer").get<int>(), r.at("rows").get<int>(), r.at("cols").get<int>(),
                                     r.at("padded_rows").get<int>(), r.at("padded_cols").get<int>(),
                                     r.at("bs").get<int>()});
    }
    for (const auto& b : j.at("bindings")) image.bindings.push_back(b.get<std::map<std::string, int>>());
    for (const auto& r : image.regions) {
      if (r.offset < 0 || r.length != static_cast<long long>(r.padded_rows) * r.padded_cols ||
          r.offset + r.length > image.size || r.bs < 1 || r.padded_rows % r.bs || r.padded_cols % r.bs) {
        throw IoError("DRAM layout region '" + r.name + "' is inconsistent");
      }
    }
    for (const auto& b : image.bindings) {
      for (const auto& [name, idx] : b) {
        if (idx < 0 || idx >= static_cast<int>(image.regions.size())) throw IoError("DRAM layout binding out of range");
      }
    }
    return image;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed DRAM layout: ") + e.what());
  }
}

void place_matrix(std::vector<std::int32_t>& dram, const Region& region, const Matrix& m) {
  if (m.rows != region.rows || m.cols != region.cols) {
    throw ShapeError("matrix is " + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ", region '" + region.name +
                     "' expects " + std::to_string(region.rows) + "x" + std::to_string(region.cols));
  }
  std::fill(dram.begin() + region.offset, dram.begin() + region.offset + region.length, 0);
  for (int r = 0; r < m.rows; ++r) {
    std::copy_n(m.data.begin() + static_cast<long long>(r) * m.cols, m.cols,
                dram.begin() + region.offset + static_cast<long long>(r) * region.padded_cols);
  }
}

Matrix extract_matrix(const std::vector<std::int32_t>& dram, const Region& region) {
  Matrix m(region.rows, region.cols);
  for (int r = 0; r < m.rows; ++r) {
    std::copy_n(dram.begin() + region.offset + static_cast<long long>(r) * region.padded_cols, m.cols,
                m.data.begin() + static_cast<long long>(r) * m.cols);
  }
  return m;
}

void clear_padding(std::vector<std::int32_t>& dram, const Region& region) {
  for (int r = 0; r < region.padded_rows; ++r) {
    const auto row = dram.begin() + region.offset + static_cast<long long>(r) * region.padded_cols;
    std::fill(row + (r < region.rows ? region.cols : 0), row + region.padded_cols, 0);
  }
}

}  // namespace vta
