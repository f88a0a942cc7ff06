#include "vta/pipeline.hpp"

#include <limits>
#include <regex>

#include "vta/blocking.hpp"
#include "vta/dram.hpp"
#include "vta/error.hpp"

namespace vta {

LayerPlan plan_layer(const IrProgram& program, const VtaConfig& config, std::optional<int> strategy) {
  LayerPlan plan;
  plan.program = validate_shapes(program, config);
  plan.strategy = strategy.value_or(program.strategy.value_or(1));
  if (plan.strategy < 1 || plan.strategy > 4) {
    throw PlanError("unknown strategy " + std::to_string(plan.strategy) + " (expected 1..4)");
  }
  if (plan.program.gemm_shape) {
    plan.gemm = plan_gemm(*plan.program.gemm_shape, plan.strategy, config);
    if (const auto v = validate_plan(*plan.gemm, *plan.program.gemm_shape, config)) {
      throw PlanError("GEMM plan violates " + to_string(v->kind) + " in partition " + std::to_string(v->partition) +
                      ": " + v->detail);
    }
  }
  const auto pairs = program_alu_pairs(plan.program);
  plan.alu = plan_alu(pairs, config);
  if (const auto v = validate_alu_plan(plan.alu, pairs, config)) {
    throw PlanError("ALU plan violates " + to_string(v->kind) + ": " + v->detail);
  }
  return plan;
}

Lowered lower_layer(const LayerPlan& plan, const DramImage& image, int layer) {
  return lower(plan.program, plan.gemm ? &*plan.gemm : nullptr, plan.alu, image, layer);
}

Compiled compile_program(const IrProgram& program, const VtaConfig& config, std::optional<int> strategy) {
  Compiled c;
  c.plan = plan_layer(program, config, strategy);
  c.image = allocate_dram({c.plan.program});
  c.lowered = lower_layer(c.plan, c.image, 0);
  c.stats = count_stats(c.lowered.stream, c.image);
  return c;
}

MatrixSet load_file_matrices(const IrProgram& program, const std::filesystem::path& base_dir) {
  MatrixSet out;
  for (const auto& m : program.matrices) {
    if (m.source != SourceKind::File) continue;
    out[m.name] = read_matrix_bin(base_dir / m.path, m.rows, m.cols);
  }
  return out;
}

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, InputRange range) {
  Matrix m(rows, cols);
  if (range == InputRange::Int8) {
    std::uniform_int_distribution<int> dist(-128, 127);
    for (auto& v : m.data) v = dist(rng);
  } else {
    std::uniform_int_distribution<std::int32_t> dist(std::numeric_limits<std::int32_t>::min(),
                                                     std::numeric_limits<std::int32_t>::max());
    for (auto& v : m.data) v = dist(rng);
  }
  return m;
}

MatrixSet random_matrices(const IrProgram& program, std::mt19937_64& rng, InputRange range, bool include_files) {
  MatrixSet out;
  for (const auto& m : program.matrices) {
    if (m.source == SourceKind::Input || (include_files && m.source == SourceKind::File)) {
      out[m.name] = random_matrix(m.rows, m.cols, rng, range);
    }
  }
  return out;
}

void place_layer(std::vector<std::int32_t>& dram, const DramImage& image, int layer, const PaddedProgram& program,
                 const MatrixSet& matrices) {
  for (const auto& m : program.program.matrices) {
    if (m.source == SourceKind::Output) continue;
    const auto it = matrices.find(m.name);
    if (it == matrices.end()) throw MissingInputError("no data for matrix '" + m.name + "'");
    place_matrix(dram, image.region(layer, m.name), it->second);
  }
  place_diagonal(dram, image, layer, program);
}

void place_diagonal(std::vector<std::int32_t>& dram, const DramImage& image, int layer, const PaddedProgram& program) {
  if (!program.program.gemm || !program.program.gemm->scalar()) return;
  const int bs = program.config.bs;
  Matrix m(bs, bs);
  m.data = expand_bgemm_scalar({1, 1, 1}, std::get<std::int32_t>(program.program.gemm->rhs), bs).diagonal.values;
  place_matrix(dram, image.region(layer, kDiagonal), m);
}

Matrix simulate(const Compiled& compiled, const MatrixSet& matrices, const TraceOptions& trace) {
  std::vector<std::int32_t> dram(static_cast<std::size_t>(compiled.image.size), 0);
  place_layer(dram, compiled.image, 0, compiled.plan.program, matrices);
  auto result = run(compiled.lowered.stream, compiled.image, compiled.plan.program.config, std::move(dram), trace);
  return extract_matrix(result.dram, compiled.image.region(0, compiled.plan.program.program.output().name));
}

BlockShape parse_shape(const std::string& text) {
  static const std::regex re(R"(^([1-9][0-9]{0,5})x([1-9][0-9]{0,5})x([1-9][0-9]{0,5})$)");
  std::smatch m;
  if (!std::regex_match(text, m, re)) throw SyntaxError("--shape", "expected AxLxB with positive block counts");
  return {std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3])};
}

IrProgram synthetic_gemm(BlockShape s, int bs) {
  IrProgram p;
  p.name = "_stats";
  p.matrices = {{"A", s.alpha * bs, s.lambda * bs, SourceKind::Input, ""},
                {"B", s.lambda * bs, s.beta * bs, SourceKind::Input, ""},
                {"C", s.alpha * bs, s.beta * bs, SourceKind::Output, ""}};
  p.inp = BufferLoad{"A", {}};
  p.wgt = BufferLoad{"B", {}};
  p.gemm = GemmClause{"C", "A", std::string("B")};
  p.store = StoreClause{"C", std::nullopt};
  return p;
}

}  // namespace vta
