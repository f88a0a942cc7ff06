#include "vta/chain.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>

#include "vta/dram.hpp"
#include "vta/error.hpp"
#include "vta/pipeline.hpp"

namespace vta {

Matrix im2row(const Tensor& t, const Im2RowParams& p) {
  if (t.channels != p.channels || t.height != p.height || t.width != p.width) {
    throw ShapeError("im2row: tensor is " + std::to_string(t.channels) + "x" + std::to_string(t.height) + "x" +
                     std::to_string(t.width) + ", parameters expect " + std::to_string(p.channels) + "x" +
                     std::to_string(p.height) + "x" + std::to_string(p.width));
  }
  if (p.kernel_h < 1 || p.kernel_w < 1 || p.stride_h < 1 || p.stride_w < 1 || p.pad_h < 0 || p.pad_w < 0 ||
      p.height + 2 * p.pad_h < p.kernel_h || p.width + 2 * p.pad_w < p.kernel_w) {
    throw ShapeError("im2row: kernel, stride or padding does not fit the tensor");
  }
  Matrix m(p.rows(), p.cols());
  const int ow = p.out_w();
  for (int r = 0; r < m.rows; ++r) {
    const int y0 = (r / ow) * p.stride_h - p.pad_h;
    const int x0 = (r % ow) * p.stride_w - p.pad_w;
    for (int c = 0; c < p.channels; ++c) {
      for (int i = 0; i < p.kernel_h; ++i) {
        for (int j = 0; j < p.kernel_w; ++j) {
          const int y = y0 + i;
          const int x = x0 + j;
          const bool inside = y >= 0 && y < p.height && x >= 0 && x < p.width;
          m.at(r, (c * p.kernel_h + i) * p.kernel_w + j) = inside ? t.at(c, y, x) : 0;
        }
      }
    }
  }
  return m;
}

Tensor row2tensor(const Matrix& m, int channels, int height, int width) {
  if (channels < 1 || height < 1 || width < 1 || m.rows != height * width || m.cols != channels) {
    throw ShapeError("row2tensor: a " + std::to_string(m.rows) + "x" + std::to_string(m.cols) +
                     " matrix cannot become a " + std::to_string(channels) + "x" + std::to_string(height) + "x" +
                     std::to_string(width) + " tensor");
  }
  Tensor t(channels, height, width);
  for (int c = 0; c < channels; ++c) {
    for (int h = 0; h < height; ++h) {
      for (int w = 0; w < width; ++w) t.at(c, h, w) = m.at(h * width + w, c);
    }
  }
  return t;
}

Matrix flatten(const Tensor& t) {
  Matrix m(1, static_cast<int>(t.data.size()));
  m.data = t.data;
  return m;
}

namespace {

void only_keys(const nlohmann::json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw SyntaxError(where, "expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw SyntaxError(where, "unknown key '" + key + "'");
    }
  }
}

int get_int(const nlohmann::json& j, const std::string& key, const std::string& where, int min) {
  if (!j.contains(key)) throw SyntaxError(where, "missing '" + key + "'");
  const auto& v = j.at(key);
  if (!v.is_number_integer()) throw SyntaxError(where + "." + key, "expected an integer");
  const auto x = v.get<long long>();
  if (x < min || x > (1 << 24)) throw SemanticError(where + "." + key + ": value " + std::to_string(x) + " out of range");
  return static_cast<int>(x);
}

std::array<int, 2> get_pair(const nlohmann::json& j, const std::string& key, const std::string& where, int min,
                            std::array<int, 2> fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer()) {
    throw SyntaxError(where + "." + key, "expected [int, int]");
  }
  std::array<int, 2> out{};
  for (int i = 0; i < 2; ++i) {
    const auto x = v[i].get<long long>();
    if (x < min || x > (1 << 24)) throw SemanticError(where + "." + key + ": value out of range");
    out[i] = static_cast<int>(x);
  }
  return out;
}

Reshape parse_reshape(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    throw SyntaxError(where, "expected an object with a string 'kind'");
  }
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "none") {
    only_keys(j, where, {"kind"});
    return ReshapeNone{};
  }
  if (kind == "row2tensor") {
    only_keys(j, where, {"kind", "channels", "height", "width"});
    return ReshapeRow2Tensor{get_int(j, "channels", where, 1), get_int(j, "height", where, 1),
                             get_int(j, "width", where, 1)};
  }
  if (kind == "im2row") {
    only_keys(j, where, {"kind", "channels", "height", "width", "kernel", "stride", "pad"});
    Im2RowParams p;
    p.channels = get_int(j, "channels", where, 1);
    p.height = get_int(j, "height", where, 1);
    p.width = get_int(j, "width", where, 1);
    if (!j.contains("kernel")) throw SyntaxError(where, "missing 'kernel'");
    const auto k = get_pair(j, "kernel", where, 1, {1, 1});
    const auto s = get_pair(j, "stride", where, 1, {1, 1});
    const auto pad = get_pair(j, "pad", where, 0, {0, 0});
    p.kernel_h = k[0];
    p.kernel_w = k[1];
    p.stride_h = s[0];
    p.stride_w = s[1];
    p.pad_h = pad[0];
    p.pad_w = pad[1];
    if (p.height + 2 * p.pad_h < p.kernel_h || p.width + 2 * p.pad_w < p.kernel_w) {
      throw SemanticError(where + ": kernel larger than the padded tensor");
    }
    return ReshapeIm2Row{p};
  }
  throw SyntaxError(where + ".kind", "unknown reshape '" + kind + "'");
}

}  // namespace

NetworkManifest parse_manifest(const nlohmann::json& j) {
  only_keys(j, "$", {"layers", "edges", "input_shape", "output"});
  NetworkManifest m;
  if (!j.contains("layers") || !j.at("layers").is_array() || j.at("layers").empty()) {
    throw SyntaxError("$.layers", "expected a non-empty array");
  }
  for (std::size_t i = 0; i < j.at("layers").size(); ++i) {
    const auto& l = j.at("layers")[i];
    const auto where = "$.layers[" + std::to_string(i) + "]";
    only_keys(l, where, {"ir", "strategy"});
    if (!l.contains("ir") || !l.at("ir").is_string()) throw SyntaxError(where + ".ir", "expected a path string");
    ManifestLayer layer{l.at("ir").get<std::string>(), std::nullopt};
    if (l.contains("strategy")) {
      const int s = get_int(l, "strategy", where, 1);
      if (s > 4) throw SemanticError(where + ".strategy: strategy must be in 1..4");
      layer.strategy = s;
    }
    m.layers.push_back(std::move(layer));
  }
  const int n = static_cast<int>(m.layers.size());

  if (!j.contains("input_shape")) throw SyntaxError("$", "missing 'input_shape'");
  const auto& shape = j.at("input_shape");
  if (!shape.is_array() || shape.size() != 4) throw SyntaxError("$.input_shape", "expected [N, C, H, W]");
  for (int i = 0; i < 4; ++i) {
    if (!shape[i].is_number_integer() || shape[i].get<long long>() < 1 || shape[i].get<long long>() > (1 << 24)) {
      throw SyntaxError("$.input_shape[" + std::to_string(i) + "]", "expected a positive integer");
    }
    m.input_shape[i] = shape[i].get<int>();
  }
  if (m.input_shape[0] != 1) throw SemanticError("$.input_shape: only batch size 1 is supported");

  m.output = get_int(j, "output", "$", 0);
  if (m.output >= n) throw SemanticError("$.output: no layer " + std::to_string(m.output));

  if (!j.contains("edges") || !j.at("edges").is_array()) throw SyntaxError("$.edges", "expected an array");
  for (std::size_t i = 0; i < j.at("edges").size(); ++i) {
    const auto& e = j.at("edges")[i];
    const auto where = "$.edges[" + std::to_string(i) + "]";
    only_keys(e, where, {"from", "to", "matrix", "reshape", "col_offset"});
    ManifestEdge edge;
    if (!e.contains("from")) throw SyntaxError(where, "missing 'from'");
    if (e.at("from").is_string()) {
      if (e.at("from").get<std::string>() != "input") throw SyntaxError(where + ".from", "expected \"input\" or a layer");
    } else {
      edge.from = get_int(e, "from", where, 0);
    }
    edge.to = get_int(e, "to", where, 0);
    if (edge.to >= n) throw SemanticError(where + ".to: no layer " + std::to_string(edge.to));
    if (edge.from && *edge.from >= edge.to) {
      throw SemanticError(where + ": edges must go from an earlier layer to a later one");
    }
    if (e.contains("matrix")) {
      if (!e.at("matrix").is_string()) throw SyntaxError(where + ".matrix", "expected a matrix name");
      edge.matrix = e.at("matrix").get<std::string>();
    }
    if (e.contains("reshape")) edge.reshape = parse_reshape(e.at("reshape"), where + ".reshape");
    if (e.contains("col_offset")) edge.col_offset = get_int(e, "col_offset", where, 0);
    m.edges.push_back(std::move(edge));
  }
  return m;
}

NetworkManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError("byte " + std::to_string(e.byte), "malformed manifest JSON");
  }
  return parse_manifest(j);
}

namespace {

Tensor input_as_tensor(const NetworkManifest& m, const Tensor& input) {
  if (input.channels != m.input_shape[1] || input.height != m.input_shape[2] || input.width != m.input_shape[3]) {
    throw ShapeError("network input is " + std::to_string(input.channels) + "x" + std::to_string(input.height) + "x" +
                     std::to_string(input.width) + ", the manifest declares " + std::to_string(m.input_shape[1]) +
                     "x" + std::to_string(m.input_shape[2]) + "x" + std::to_string(m.input_shape[3]));
  }
  return input;
}

// The matrix an edge delivers, before placement at its column offset.
Matrix edge_data(const ManifestEdge& e, const NetworkManifest& m, const Tensor& input,
                 const std::vector<Matrix>& outputs) {
  if (const auto* r = std::get_if<ReshapeIm2Row>(&e.reshape)) {
    const Tensor t = e.from ? row2tensor(outputs[*e.from], r->params.channels, r->params.height, r->params.width)
                            : input_as_tensor(m, input);
    return im2row(t, r->params);
  }
  if (const auto* r = std::get_if<ReshapeRow2Tensor>(&e.reshape)) {
    if (!e.from) {
      const Tensor t = input_as_tensor(m, input);
      if (t.channels != r->channels || t.height != r->height || t.width != r->width) {
        throw ShapeError("row2tensor dimensions differ from the network input");
      }
      return flatten(t);
    }
    return flatten(row2tensor(outputs[*e.from], r->channels, r->height, r->width));
  }
  if (e.from) return outputs[*e.from];
  const Tensor t = input_as_tensor(m, input);
  return im2row(t, Im2RowParams{t.channels, t.height, t.width, 1, 1, 1, 1, 0, 0});
}

const MatrixDecl& edge_target(const ManifestEdge& e, const IrProgram& p, int layer) {
  if (e.matrix.empty()) {
    const MatrixDecl* only = nullptr;
    for (const auto& d : p.matrices) {
      if (d.source != SourceKind::Input) continue;
      if (only) throw SemanticError("layer " + std::to_string(layer) + " has several inputs; edges must name one");
      only = &d;
    }
    if (!only) throw SemanticError("layer " + std::to_string(layer) + " has no input matrix");
    return *only;
  }
  const auto* d = p.find(e.matrix);
  if (!d || d->source != SourceKind::Input) {
    throw SemanticError("layer " + std::to_string(layer) + " has no input matrix '" + e.matrix + "'");
  }
  return *d;
}

}  // namespace

NetworkResult run_network(const NetworkManifest& manifest, const std::filesystem::path& base_dir,
                          const VtaConfig& config, const Tensor& input, const NetworkOptions& options) {
  const int n = static_cast<int>(manifest.layers.size());
  std::vector<LayerPlan> plans;
  std::vector<PaddedProgram> padded;
  std::vector<std::filesystem::path> ir_dirs;
  for (int i = 0; i < n; ++i) {
    try {
      const auto path = base_dir / manifest.layers[i].ir;
      ir_dirs.push_back(path.parent_path());
      const auto program = load_ir(path.string());
      const auto strategy = options.strategy ? options.strategy : manifest.layers[i].strategy;
      plans.push_back(plan_layer(program, config, strategy));
      padded.push_back(plans.back().program);
    } catch (const LayerError&) {
      throw;
    } catch (const Error& e) {
      throw LayerError(i, e.what());
    }
  }

  // Resolve edge targets and decide which inputs can share the producer's region.
  std::vector<std::string> targets;
  std::map<std::pair<int, std::string>, int> fan_in;
  for (const auto& e : manifest.edges) {
    const auto& d = edge_target(e, plans[e.to].program.program, e.to);
    targets.push_back(d.name);
    ++fan_in[{e.to, d.name}];
  }
  std::vector<RegionAlias> aliases;
  std::vector<char> edge_aliased(manifest.edges.size(), 0);
  std::vector<char> output_aliased(n, 0);
  for (std::size_t k = 0; k < manifest.edges.size(); ++k) {
    const auto& e = manifest.edges[k];
    if (!e.from || !std::holds_alternative<ReshapeNone>(e.reshape) || e.col_offset != 0) continue;
    if (fan_in[{e.to, targets[k]}] != 1) continue;
    const auto& src = plans[*e.from].program.program.output();
    const auto* dst = plans[e.to].program.program.find(targets[k]);
    if (src.rows != dst->rows || src.cols != dst->cols) continue;
    aliases.push_back({e.to, targets[k], *e.from});
    edge_aliased[k] = 1;
    output_aliased[*e.from] = 1;
  }
  for (int i = 0; i < n; ++i) {
    for (const auto& d : plans[i].program.program.matrices) {
      if (d.source == SourceKind::Input && !fan_in.contains({i, d.name})) {
        throw LayerError(i, "input matrix '" + d.name + "' is not fed by any edge");
      }
    }
  }

  const auto image = allocate_dram(padded, aliases);
  NetworkResult result;
  for (const auto& r : image.regions) result.regions += r.role != RegionRole::Scratch;
  std::vector<std::int32_t> dram(static_cast<std::size_t>(image.size), 0);
  result.layer_outputs.resize(n);

  for (int i = 0; i < n; ++i) {
    try {
      const auto& pp = plans[i].program;
      MatrixSet data = load_file_matrices(pp.program, ir_dirs[i]);
      LayerReport report;
      report.strategy = plans[i].strategy;
      std::map<std::string, Matrix> assembled;
      for (std::size_t k = 0; k < manifest.edges.size(); ++k) {
        const auto& e = manifest.edges[k];
        if (e.to != i) continue;
        if (edge_aliased[k]) {
          report.aliased_input = true;
          continue;
        }
        const auto* d = pp.program.find(targets[k]);
        auto [it, fresh] = assembled.try_emplace(d->name, d->rows, d->cols);
        const Matrix part = edge_data(e, manifest, input, result.layer_outputs);
        if (part.rows != d->rows || e.col_offset + part.cols > d->cols) {
          throw ShapeError("edge delivers " + std::to_string(part.rows) + "x" + std::to_string(part.cols) +
                           " at column " + std::to_string(e.col_offset) + " into '" + d->name + "' (" +
                           std::to_string(d->rows) + "x" + std::to_string(d->cols) + ")");
        }
        for (int r = 0; r < part.rows; ++r) {
          for (int c = 0; c < part.cols; ++c) it->second.at(r, e.col_offset + c) = part.at(r, c);
        }
      }
      for (auto& [name, m] : assembled) data[name] = std::move(m);
      for (const auto& d : pp.program.matrices) {
        if (d.source == SourceKind::Output) continue;
        const int region = image.region_of(i, d.name);
        if (image.regions[region].layer != i) continue;  // produced by an earlier layer
        place_matrix(dram, image.regions[region], data.at(d.name));
      }
      place_diagonal(dram, image, i, pp);
      const auto lowered = lower_layer(plans[i], image, i);
      report.stats = count_stats(lowered.stream, image);
      report.partitions = lowered.fused ? 1 : lowered.gemm_partitions + lowered.alu_partitions;
      auto run_result = run(lowered.stream, image, config, std::move(dram), options.trace);
      dram = std::move(run_result.dram);
      report.trace = run_result.trace;
      const auto& out_region = image.region(i, pp.program.output().name);
      if (output_aliased[i]) clear_padding(dram, out_region);
      result.layer_outputs[i] = extract_matrix(dram, out_region);
      result.layers.push_back(report);
    } catch (const LayerError&) {
      throw;
    } catch (const Error& e) {
      throw LayerError(i, e.what());
    }
  }
  result.output = result.layer_outputs[manifest.output];
  return result;
}

}  // namespace vta
