// vtac: compile, run, verify and inspect VTA IR programs.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vta/chain.hpp"
#include "vta/error.hpp"
#include "vta/log.hpp"
#include "vta/oracle.hpp"
#include "vta/pipeline.hpp"
#include "vta/serialize.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

vta::VtaConfig read_config(const std::string& spec) {
  if (spec == "default") return vta::VtaConfig::defaults();
  if (spec == "desk") return vta::VtaConfig::desk();
  return vta::load_config(spec);
}

vta::IrProgram read_ir(const std::string& path) {
  std::vector<vta::Diagnostic> warnings;
  auto program = vta::load_ir(path, &warnings);
  for (const auto& w : warnings) vta::log::warn(path + ": " + w.where + ": " + w.message);
  return program;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw vta::IoError("cannot write " + path.string());
  out << text;
}

json stats_json(const vta::StreamStats& s) {
  return {{"instructions", s.instructions}, {"uops", s.uops}, {"loads", s.loads}, {"stores", s.stores}};
}

// ---- compile ---------------------------------------------------------------

struct CompileArgs {
  std::string ir;
  std::string config;
  std::optional<int> strategy;
  std::string out;
  bool emit_plan = false;
};

int cmd_compile(const CompileArgs& a) {
  const auto program = read_ir(a.ir);
  const auto config = read_config(a.config);
  const auto compiled = vta::compile_program(program, config, a.strategy);
  const auto files = vta::load_file_matrices(program, fs::path(a.ir).parent_path());

  std::vector<std::int32_t> dram(static_cast<std::size_t>(compiled.image.size), 0);
  for (const auto& [name, m] : files) vta::place_matrix(dram, compiled.image.region(0, name), m);
  vta::place_diagonal(dram, compiled.image, 0, compiled.plan.program);
  const auto bundle = vta::make_bundle(program.name, config, compiled.image, compiled.lowered.stream, dram);
  vta::write_artifacts(a.out, bundle);

  if (a.emit_plan) {
    json plan = {{"gemm", compiled.plan.gemm ? vta::plan_to_json(*compiled.plan.gemm) : json(nullptr)},
                 {"alu", vta::alu_plan_to_json(compiled.plan.alu)},
                 {"fused", compiled.lowered.fused}};
    write_text(fs::path(a.out) / ("plan" + program.name + ".json"), plan.dump(2) + "\n");
  }
  json summary = {{"instructions", compiled.stats.instructions},
                  {"uops", compiled.stats.uops},
                  {"partitions", compiled.partitions()},
                  {"strategy", compiled.plan.strategy}};
  std::cout << summary.dump() << '\n';
  return 0;
}

// ---- run -------------------------------------------------------------------

struct RunArgs {
  std::string artifacts;
  std::string input;
  std::string out;
  bool trace = false;
  bool digests = false;
};

int cmd_run(const RunArgs& a) {
  const auto bundle = vta::read_artifacts(a.artifacts);
  vta::verify_residency(bundle.stream, bundle.image, bundle.config);
  auto dram = vta::initial_dram(bundle, vta::read_int32_file(a.input));
  vta::TraceOptions trace;
  if (a.trace) trace.sink = &std::cout;
  trace.digests = a.digests;
  const auto result = vta::run(bundle.stream, bundle.image, bundle.config, std::move(dram), trace);
  const auto it = std::find_if(bundle.image.regions.begin(), bundle.image.regions.end(),
                               [](const vta::Region& r) { return r.role == vta::RegionRole::Output; });
  if (it == bundle.image.regions.end()) throw vta::IoError("the layout has no output region");
  vta::write_matrix_bin(a.out, vta::extract_matrix(result.dram, *it));
  vta::log::info("executed " + std::to_string(result.trace.executed) + " ops");
  return 0;
}

// ---- verify ----------------------------------------------------------------

struct VerifyArgs {
  std::string ir;
  std::string config;
  int seeds = 1;
  std::uint64_t seed = 0;
  std::vector<int> strategies{1, 2, 3, 4};
  std::string range = "int8";
  std::string artifacts;
  bool json_out = false;
};

int cmd_verify(const VerifyArgs& a) {
  const auto program = read_ir(a.ir);
  const auto config = read_config(a.config);
  const auto files = vta::load_file_matrices(program, fs::path(a.ir).parent_path());
  const auto range = a.range == "int32" ? vta::InputRange::Int32 : vta::InputRange::Int8;

  std::optional<vta::ArtifactBundle> bundle;
  if (!a.artifacts.empty()) bundle = vta::read_artifacts(a.artifacts);
  std::vector<std::optional<int>> strategies;
  if (bundle) {
    strategies.push_back(std::nullopt);
  } else {
    for (int s : a.strategies) strategies.push_back(s);
  }

  json cases = json::array();
  int matches = 0;
  int total = 0;
  long long mismatches = 0;
  json first = nullptr;
  for (int n = 0; n < a.seeds; ++n) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(n);
    std::mt19937_64 rng(seed);
    auto inputs = vta::random_matrices(program, rng, range, false);
    for (const auto& [name, m] : files) inputs[name] = m;
    const auto bs = bundle ? bundle->config.bs : config.bs;
    const auto reference = vta::reference_eval(program, inputs, bs);

    for (const auto& strategy : strategies) {
      vta::Matrix simulated;
      if (bundle) {
        std::vector<std::int32_t> in;
        for (const auto& m : program.matrices) {
          if (m.source == vta::SourceKind::Input) in.insert(in.end(), inputs[m.name].data.begin(), inputs[m.name].data.end());
        }
        const auto result = vta::run(bundle->stream, bundle->image, bundle->config, vta::initial_dram(*bundle, in));
        const auto it = std::find_if(bundle->image.regions.begin(), bundle->image.regions.end(),
                                     [](const vta::Region& r) { return r.role == vta::RegionRole::Output; });
        simulated = vta::extract_matrix(result.dram, *it);
      } else {
        simulated = vta::simulate(vta::compile_program(program, config, strategy), inputs);
      }
      const auto cmp = vta::compare_bitwise(simulated, reference);
      ++total;
      matches += cmp.match;
      mismatches += cmp.mismatches;
      auto c = vta::comparison_to_json(cmp);
      c["seed"] = seed;
      c["strategy"] = strategy ? json(*strategy) : json("artifacts");
      if (!cmp.match && first.is_null()) first = c["first_divergence"];
      if (!a.json_out) {
        std::cout << "seed " << seed << " strategy " << (strategy ? std::to_string(*strategy) : "artifacts") << ": ";
        if (cmp.match) {
          std::cout << "match\n";
        } else {
          std::cout << "MISMATCH " << cmp.mismatches << " elements, first at (" << cmp.first->row << ", "
                    << cmp.first->col << ") simulated " << cmp.first->simulated << " reference "
                    << cmp.first->reference << '\n';
        }
      }
      cases.push_back(std::move(c));
    }
  }
  const bool ok = matches == total;
  if (a.json_out) {
    json out = {{"status", ok ? "match" : "mismatch"},
                {"cases", std::move(cases)},
                {"matched", matches},
                {"total", total},
                {"mismatches", mismatches},
                {"first_divergence", first}};
    std::cout << out.dump() << '\n';
  } else {
    std::cout << matches << "/" << total << " match\n";
  }
  return ok ? 0 : kExitFailure;
}

// ---- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string shape;
  std::string ir;
  std::string config;
  bool json_out = false;
};

int cmd_stats(const StatsArgs& a) {
  const auto config = read_config(a.config);
  const auto program = a.ir.empty() ? vta::synthetic_gemm(vta::parse_shape(a.shape), config.bs) : read_ir(a.ir);
  json rows = json::array();
  std::optional<vta::BlockShape> shape;
  for (int s = 1; s <= 4; ++s) {
    const auto c = vta::compile_program(program, config, s);
    shape = c.plan.program.gemm_shape;
    auto row = stats_json(c.stats);
    row["strategy"] = s;
    row["partitions"] = c.partitions();
    rows.push_back(std::move(row));
  }
  if (a.json_out) {
    json out = {{"strategies", rows}};
    out["shape"] = shape ? json{shape->alpha, shape->lambda, shape->beta} : json(nullptr);
    std::cout << out.dump() << '\n';
    return 0;
  }
  if (shape) std::cout << "shape " << shape->alpha << "x" << shape->lambda << "x" << shape->beta << " blocks\n";
  std::cout << "strategy  partitions  instructions  uops\n";
  for (const auto& r : rows) {
    std::ostringstream line;
    line << std::setw(8) << r["strategy"].get<int>() << std::setw(12) << r["partitions"].get<int>() << std::setw(14)
         << r["instructions"].get<long long>() << std::setw(6) << r["uops"].get<long long>();
    std::cout << line.str() << '\n';
  }
  return 0;
}

// ---- chain -----------------------------------------------------------------

struct ChainArgs {
  std::string manifest;
  std::string config;
  std::string input;
  std::string out;
  std::optional<int> strategy;
  bool json_out = false;
};

int cmd_chain(const ChainArgs& a) {
  const auto manifest = vta::load_manifest(a.manifest);
  const auto config = read_config(a.config);
  const auto& shape = manifest.input_shape;
  vta::Tensor input(shape[1], shape[2], shape[3]);
  const auto values = vta::read_int32_file(a.input);
  if (values.size() != input.data.size()) {
    throw vta::IoError("input holds " + std::to_string(values.size()) + " values, the manifest needs " +
                       std::to_string(input.data.size()));
  }
  input.data = values;
  vta::NetworkOptions options;
  options.strategy = a.strategy;
  const auto result = vta::run_network(manifest, fs::path(a.manifest).parent_path(), config, input, options);

  fs::create_directories(a.out);
  vta::write_matrix_bin(fs::path(a.out) / "output.bin", result.output);
  json layers = json::array();
  for (std::size_t i = 0; i < result.layers.size(); ++i) {
    vta::write_matrix_bin(fs::path(a.out) / ("layer" + std::to_string(i) + ".bin"), result.layer_outputs[i]);
    const auto& l = result.layers[i];
    auto j = stats_json(l.stats);
    j["layer"] = i;
    j["strategy"] = l.strategy;
    j["partitions"] = l.partitions;
    j["aliased_input"] = l.aliased_input;
    j["rows"] = result.layer_outputs[i].rows;
    j["cols"] = result.layer_outputs[i].cols;
    layers.push_back(std::move(j));
  }
  json summary = {{"layers", layers},
                  {"output", {{"rows", result.output.rows}, {"cols", result.output.cols}}},
                  {"regions", result.regions}};
  write_text(fs::path(a.out) / "summary.json", summary.dump(2) + "\n");
  if (a.json_out) {
    std::cout << summary.dump() << '\n';
  } else {
    for (const auto& l : layers) {
      std::cout << "layer " << l["layer"].get<int>() << ": " << l["rows"].get<int>() << "x" << l["cols"].get<int>()
                << ", strategy " << l["strategy"].get<int>() << ", " << l["instructions"].get<long long>()
                << " instructions, " << l["uops"].get<long long>() << " uops\n";
    }
    std::cout << "output " << result.output.rows << "x" << result.output.cols << " -> "
              << (fs::path(a.out) / "output.bin").string() << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"VTA IR compiler and functional simulator"};
  app.require_subcommand(1);

  CompileArgs ca;
  auto* compile = app.add_subcommand("compile", "Compile an IR program into artifact files");
  compile->add_option("--ir", ca.ir, "IR JSON file")->required()->check(CLI::ExistingFile);
  compile->add_option("--config", ca.config, "Config JSON file, or 'default' / 'desk'")->required();
  compile->add_option("--strategy", ca.strategy, "GEMM strategy (overrides STRATEGY)")->check(CLI::Range(1, 4));
  compile->add_option("--out", ca.out, "Output directory")->required();
  compile->add_flag("--emit-plan", ca.emit_plan, "Also write the partition plan as JSON");

  RunArgs ra;
  auto* runc = app.add_subcommand("run", "Execute compiled artifacts on an input");
  runc->add_option("--artifacts", ra.artifacts, "Artifact directory")->required()->check(CLI::ExistingDirectory);
  runc->add_option("--input", ra.input, "Input matrices, int32 little-endian")->required()->check(CLI::ExistingFile);
  runc->add_option("--out", ra.out, "Output matrix file")->required();
  runc->add_flag("--trace", ra.trace, "Print one JSON line per executed instruction");
  runc->add_flag("--digests", ra.digests, "Add buffer digests to the trace");

  VerifyArgs va;
  std::string strategies = "1,2,3,4";
  auto* verify = app.add_subcommand("verify", "Compare simulated results with the reference");
  verify->add_option("--ir", va.ir, "IR JSON file")->required()->check(CLI::ExistingFile);
  verify->add_option("--config", va.config, "Config JSON file, or 'default' / 'desk'")->required();
  verify->add_option("--seeds", va.seeds, "Number of random input sets")->check(CLI::Range(1, 1000000));
  verify->add_option("--seed", va.seed, "First seed");
  verify->add_option("--strategies", strategies, "Comma-separated strategies");
  verify->add_option("--range", va.range, "Input value range")->check(CLI::IsMember({"int8", "int32"}));
  verify->add_option("--artifacts", va.artifacts, "Verify these compiled artifacts instead of recompiling")
      ->check(CLI::ExistingDirectory);
  verify->add_flag("--json", va.json_out, "Machine-readable output");

  StatsArgs sa;
  auto* stats = app.add_subcommand("stats", "Instruction and uop counts for every strategy");
  auto* shape_opt = stats->add_option("--shape", sa.shape, "GEMM shape in blocks, AxLxB");
  auto* ir_opt = stats->add_option("--ir", sa.ir, "IR JSON file")->check(CLI::ExistingFile);
  shape_opt->excludes(ir_opt);
  stats->add_option("--config", sa.config, "Config JSON file, or 'default' / 'desk'")->required();
  stats->add_flag("--json", sa.json_out, "Machine-readable output");

  ChainArgs cha;
  auto* chain = app.add_subcommand("chain", "Run a multi-layer network manifest");
  chain->add_option("--manifest", cha.manifest, "Network manifest JSON")->required()->check(CLI::ExistingFile);
  chain->add_option("--config", cha.config, "Config JSON file, or 'default' / 'desk'")->required();
  chain->add_option("--input", cha.input, "Input tensor, CHW int32 little-endian")->required()->check(CLI::ExistingFile);
  chain->add_option("--out", cha.out, "Output directory")->required();
  chain->add_option("--strategy", cha.strategy, "Strategy for every layer")->check(CLI::Range(1, 4));
  chain->add_flag("--json", cha.json_out, "Machine-readable output");

  try {
    app.parse(argc, argv);
    if (stats->parsed() && sa.shape.empty() && sa.ir.empty()) {
      throw CLI::RequiredError("stats needs --shape or --ir");
    }
    if (verify->parsed()) {
      va.strategies.clear();
      std::stringstream ss(strategies);
      for (std::string item; std::getline(ss, item, ',');) {
        if (item != "1" && item != "2" && item != "3" && item != "4") {
          throw CLI::ValidationError("--strategies", "expected a comma-separated subset of 1,2,3,4");
        }
        va.strategies.push_back(std::stoi(item));
      }
    }
    if (stats->parsed() && !sa.shape.empty()) vta::parse_shape(sa.shape);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  } catch (const vta::SyntaxError& e) {
    std::cerr << "vtac: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (compile->parsed()) return cmd_compile(ca);
    if (runc->parsed()) return cmd_run(ra);
    if (verify->parsed()) return cmd_verify(va);
    if (stats->parsed()) return cmd_stats(sa);
    if (chain->parsed()) return cmd_chain(cha);
  } catch (const std::exception& e) {
    std::cerr << "vtac: error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
