// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "fuzz.hpp"
#include "harness.hpp"
#include "network.hpp"
#include "vta/error.hpp"
#include "vta/oracle.hpp"
#include "vta/pipeline.hpp"

using namespace vta;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are kept for the report.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (failed_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  Verdict verdict(const std::string& summary) const {
    if (failed_ == 0) return {true, summary};
    return {false, std::to_string(failed_) + "/" + std::to_string(total_) + " failed: " + notes_};
  }

 private:
  int total_ = 0;
  int failed_ = 0;
  std::string notes_;
};

Matrix make(int rows, int cols, std::initializer_list<std::int32_t> values) {
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data.begin());
  return m;
}

std::set<GemmTriple> as_set(const Partition& p) { return {p.triples.begin(), p.triples.end()}; }

constexpr const char* kLenetL3 = R"({
    "NAME": "_L3",
    "MATRICES": {
        "INPUT": [1,400, "input"],
        "WEIGHT": [400,120, "./wgt_L3.bin"],
        "OUTPUT": [1,120, "output"]
    },
    "LOAD": {
        "INP": ["INPUT"],
        "WGT": ["WEIGHT"]
    },
    "GEMM": ["OUTPUT","INPUT","WEIGHT"],
    "ALU": {
        "OUTPUT": [
            ["MAX_IMM", [[0,1], 0, 120]]
        ]
    },
    "STORE": {"OUTPUT": ["OUTPUT"]},
    "STRATEGY": 1
})";

// Leading partitions needed until `target` output blocks have all lambda
// products.
int partitions_to_complete(const OffloadPlan& plan, BlockShape shape, int target) {
  std::vector<int> done(static_cast<std::size_t>(shape.alpha * shape.beta), 0);
  int complete = 0;
  for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
    for (const auto& t : plan.partitions[n].triples) {
      if (++done[t.l] == shape.lambda) ++complete;
    }
    if (complete >= target) return static_cast<int>(n) + 1;
  }
  return -1;
}

Verdict worked_examples() {
  Check c;
  const auto idx = matrix_to_block_index(1, 2, 2, 1, 2);
  c.expect((idx == BlockIndex{1, 1, 0}), "matrix_to_block_index(1,2)");

  const VtaConfig desk = VtaConfig::desk();
  const auto alu = parse_ir(R"({"NAME":"_a","MATRICES":{"X":[6,2,"input"],"C":[6,2,"output"]},
    "LOAD":{"ACC":["X"]},
    "ALU":{"C":[["MAX",[[0,0],[1,0],1]],["MAX_IMM",[[0,0],1,1]],["MAX",[[0,2],[1,2],3]],["MAX_IMM",[[0,1],0,6]]]},
    "STORE":{"C":["C"]}})");
  const auto x = make(6, 2, {-8, 6, -7, 5, -6, 4, -5, 3, -3, 2, -2, 1});
  const auto want = make(6, 2, {1, 6, 0, 5, 0, 4, 0, 3, 0, 2, 0, 1});
  for (int s = 1; s <= 4; ++s) {
    c.expect(simulate(compile_program(alu, desk, s), {{"X", x}}) == want, "ALU example, strategy " + std::to_string(s));
  }
  c.expect(reference_eval(alu, {{"X", x}}, 2) == want, "ALU example, reference");

  const auto add = parse_ir(R"({"NAME":"_add","MATRICES":{"A":[2,2,"input"],"B":[2,2,"input"],"C":[2,2,"output"]},
    "LOAD":{"ACC":["A","B"]},"ALU":{"C":[["ADD_ACC",["A","B"]]]},"STORE":{"C":["C"]}})");
  const MatrixSet add_in{{"A", make(2, 2, {1, 2, 3, 4})}, {"B", make(2, 2, {1, -2, 2, -1})}};
  c.expect(simulate(compile_program(add, desk), add_in) == make(2, 2, {2, 0, 5, 3}), "ADD_ACC example");

  const VtaConfig four_block{2, 4, 4, 8};
  const BlockShape shape{2, 4, 4};
  const auto s1 = plan_gemm(shape, 1, four_block);
  c.expect(s1.partitions.size() >= 2 &&
               as_set(s1.partitions[0]) == std::set<GemmTriple>{{0, 0, 0}, {0, 1, 4}, {0, 2, 8}, {0, 3, 12}} &&
               as_set(s1.partitions[1]) == std::set<GemmTriple>{{1, 0, 1}, {1, 1, 5}, {1, 2, 9}, {1, 3, 13}},
           "strategy 1 index sets");
  const auto s2 = plan_gemm(shape, 2, four_block);
  c.expect(s2.partitions.size() >= 2 &&
               as_set(s2.partitions[0]) == std::set<GemmTriple>{{0, 0, 0}, {0, 1, 4}, {1, 0, 1}, {1, 1, 5},
                                                                {4, 4, 0}, {4, 5, 4}, {5, 4, 1}, {5, 5, 5}} &&
               as_set(s2.partitions[1]) == std::set<GemmTriple>{{0, 2, 8}, {0, 3, 12}, {1, 2, 9}, {1, 3, 13},
                                                                {4, 6, 8}, {4, 7, 12}, {5, 6, 9}, {5, 7, 13}},
           "strategy 2 index sets");

  const auto z = parse_ir(R"({"NAME":"_z","MATRICES":{"A":[4,4,"input"],"B":[4,2,"input"],"C":[4,2,"output"]},
    "LOAD":{"INP":["A"],"WGT":["B"]},"GEMM":["C","A","B"],"STORE":{"C":["C"]},"STRATEGY":3})");
  const auto zc = compile_program(z, VtaConfig{2, 2, 2, 8});
  std::vector<LoadOp> inp;
  for (const auto& op : zc.lowered.stream) {
    if (const auto* ld = std::get_if<LoadOp>(&op); ld && ld->buffer == Buffer::Inp) inp.push_back(*ld);
  }
  c.expect(inp.size() == 2 && inp[1].sources == std::vector<int>{1, 3} && inp[1].dest_slot == 0,
           "second INP load takes blocks 1 and 3 into slots 0 and 1");
  return c.verdict("block index, ALU, ADD_ACC, strategy 1 and 2 index sets, LOAD example");
}

Verdict oracle_equivalence() {
  Check c;
  std::mt19937_64 rng(2024);
  int n = 0;
  for (int rep = 0; rep < 25; ++rep) {
    for (const auto variant : testing::kAllVariants) {
      for (int s = 1; s <= 4; ++s, ++n) {
        const int bs = n % 2 ? 4 : 2;
        VtaConfig config = n % 3 == 0 ? VtaConfig{bs, 2048, 1024, 2048} : VtaConfig{bs, 4, 4, 4 * bs};
        if (n % 7 == 0) config = testing::random_config(rng, bs);
        const auto p = testing::random_program(rng, variant, {bs, 8, true, true});
        const auto range = n % 2 == 0 ? InputRange::Int32 : InputRange::Int8;
        try {
          const auto cmp = testing::simulate_vs_oracle(p, config, s, rng(), range);
          c.expect(cmp.match, std::string(testing::to_string(variant)) + " case " + std::to_string(n));
        } catch (const std::exception& e) {
          c.expect(false, "case " + std::to_string(n) + ": " + e.what());
        }
      }
    }
  }
  return c.verdict(std::to_string(n) + "/" + std::to_string(n) + " programs match the reference");
}

Verdict partition_validity() {
  Check c;
  std::mt19937_64 rng(7);
  int plans = 0;
  int mutants = 0;
  for (int n = 0; n < 200; ++n) {
    const BlockShape shape{static_cast<int>(rng() % 8) + 1, static_cast<int>(rng() % 8) + 1,
                           static_cast<int>(rng() % 8) + 1};
    const auto config = testing::random_config(rng, 2);
    for (int s = 1; s <= 4; ++s, ++plans) {
      const auto plan = plan_gemm(shape, s, config);
      const auto v = validate_plan(plan, shape, config);
      c.expect(!v, "plan " + std::to_string(plans) + ": " + (v ? v->detail : ""));

      auto dropped = plan;
      dropped.partitions.back().triples.pop_back();
      const auto vd = validate_plan(dropped, shape, config);
      c.expect(vd && vd->kind == PlanViolation::Kind::Cover, "dropped triple not reported");
      ++mutants;

      // Same partition: block counts are unchanged, only disjointness breaks.
      auto twice = plan;
      twice.partitions.back().triples.push_back(plan.partitions.back().triples.front());
      const auto vt = validate_plan(twice, shape, config);
      c.expect(vt && vt->kind == PlanViolation::Kind::Disjoint, "duplicate within a partition not reported");
      ++mutants;

      // Another partition may also overflow; either report is a rejection.
      auto across = plan;
      across.partitions.front().triples.push_back(plan.partitions.back().triples.back());
      const auto va = validate_plan(across, shape, config);
      c.expect(va && va->kind != PlanViolation::Kind::Cover, "duplicate across partitions not reported");
      ++mutants;

      if (needs_partitioning(shape, config)) {
        auto merged = plan;
        for (std::size_t k = 1; k < merged.partitions.size(); ++k) {
          auto& t = merged.partitions[k].triples;
          merged.partitions[0].triples.insert(merged.partitions[0].triples.end(), t.begin(), t.end());
          t.clear();
        }
        const auto vm = validate_plan(merged, shape, config);
        c.expect(vm && vm->kind != PlanViolation::Kind::Cover && vm->kind != PlanViolation::Kind::Disjoint,
                 "overfull partition not reported");
        ++mutants;
      }
    }
  }
  return c.verdict(std::to_string(plans) + " plans valid, " + std::to_string(mutants) + " seeded violations caught");
}

Verdict uop_invariance() {
  Check c;
  std::mt19937_64 rng(11);
  for (int n = 0; n < 150; ++n) {
    const int bs = n % 2 ? 4 : 2;
    const auto p = testing::random_program(rng, testing::kAllVariants[n % 5], {bs, 8, true, true});
    const auto config = testing::random_config(rng, bs);
    const auto pp = validate_shapes(p, config);
    const long long expected = (pp.gemm_shape ? pp.gemm_shape->triples() : 0) +
                               static_cast<long long>(program_alu_pairs(pp).size());
    for (int s = 1; s <= 4; ++s) {
      c.expect(compile_program(p, config, s).stats.uops == expected, "program " + std::to_string(n));
    }
  }
  return c.verdict("150 programs: uops equal alpha*lambda*beta + ALU pairs for strategies 1-4");
}

Verdict strategy_symmetry() {
  Check c;
  std::mt19937_64 rng(13);
  for (int n = 0; n < 50; ++n) {
    const BlockShape s{static_cast<int>(rng() % 8) + 1, static_cast<int>(rng() % 8) + 1,
                       static_cast<int>(rng() % 8) + 1};
    const auto config = n % 2 ? VtaConfig::desk() : testing::random_config(rng, 2);
    const auto three = compile_program(synthetic_gemm(s, 2), config, 3).stats.instructions;
    // The mirrored shape swaps the roles of INP and WGT.
    const VtaConfig mirrored{config.bs, config.wgt_size, config.inp_size, config.acc_size};
    const auto four = compile_program(synthetic_gemm({s.beta, s.lambda, s.alpha}, 2), mirrored, 4).stats.instructions;
    std::ostringstream what;
    what << s.alpha << "x" << s.lambda << "x" << s.beta << ": " << three << " vs " << four;
    c.expect(three == four, what.str());
  }
  return c.verdict("50 shapes: S3(a,l,b) == S4(b,l,a)");
}

Verdict partition_counts() {
  Check c;
  const VtaConfig four_block{2, 4, 4, 8};
  const BlockShape shape{2, 4, 4};
  const int want[] = {4, 2, 4, 4};
  std::string got;
  for (int s = 1; s <= 4; ++s) {
    const int k = partitions_to_complete(plan_gemm(shape, s, four_block), shape, 4);
    got += (s > 1 ? "," : "") + std::to_string(k);
    c.expect(k == want[s - 1], "strategy " + std::to_string(s) + " needs " + std::to_string(k));
  }
  return c.verdict("partitions to four complete blocks: " + got);
}

testing::CommandResult vtac(const std::string& args) {
  return testing::run_command(std::string(VTAC_EXE) + " " + args + " 2>&1");
}

Verdict chain_correctness() {
  Check c;
  int runs = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto dir = testing::fresh_dir("acc_chain");
    const auto net = testing::two_layer_network(dir, 2, rng);
    for (int s = 1; s <= 4; ++s, ++runs) {
      const auto out = dir / ("out" + std::to_string(s));
      const auto r = vtac("chain --manifest " + net.manifest.string() + " --config desk --input " +
                          net.input_file.string() + " --out " + out.string() + " --strategy " + std::to_string(s));
      const bool ok = r.exit_code == 0 &&
                      read_matrix_bin(out / "output.bin", net.expected.rows, net.expected.cols) == net.expected;
      c.expect(ok, "seed " + std::to_string(seed) + " strategy " + std::to_string(s) + ": " + r.out);
    }
    fs::remove_all(dir);
  }
  std::mt19937_64 rng(99);
  const auto dir = testing::fresh_dir("acc_branch");
  const auto net = testing::branching_network(dir, 2, rng);
  const auto out = dir / "out";
  const auto r = vtac("chain --manifest " + net.manifest.string() + " --config desk --input " +
                      net.input_file.string() + " --out " + out.string());
  c.expect(r.exit_code == 0 && read_matrix_bin(out / "output.bin", net.expected.rows, net.expected.cols) == net.expected,
           "branching network: " + r.out);
  fs::remove_all(dir);
  return c.verdict(std::to_string(runs) + "/" + std::to_string(runs) + " two-layer runs and the branching network match");
}

Verdict grammar_conformance() {
  Check c;
  try {
    const auto p = parse_ir(kLenetL3);
    validate_shapes(p, VtaConfig::desk());
  } catch (const std::exception& e) {
    c.expect(false, std::string("LeNet layer: ") + e.what());
  }

  std::mt19937_64 rng(17);
  int round_trips = 0;
  int rejected = 0;
  int survivors = 0;
  for (int n = 0; n < 1000; ++n) {
    const int bs = n % 2 ? 4 : 2;
    const auto p = testing::random_program(rng, testing::kAllVariants[n % 5], {bs, 4, true, true});
    const auto text = testing::emit_grammar_text(p, rng);
    try {
      const auto q = parse_ir(text);
      const bool same = render_ir(q) == render_ir(p) && render_ir(parse_ir(render_ir(q))) == render_ir(q);
      c.expect(same, "program " + std::to_string(n) + " does not round-trip");
      if (same) ++round_trips;
    } catch (const std::exception& e) {
      c.expect(false, "program " + std::to_string(n) + ": " + e.what());
    }

    const auto [mutant, how] = testing::mutate_one_token(text, rng);
    try {
      const auto q = parse_ir(mutant);
      validate_shapes(q, VtaConfig{bs, 2048, 1024, 2048});
      ++survivors;
      c.expect(false, "mutant " + std::to_string(n) + " accepted (" + how + ")");
    } catch (const Error&) {
      ++rejected;
    }
  }
  return c.verdict("LeNet layer parses; " + std::to_string(round_trips) + " fuzzed programs round-trip; " +
                   std::to_string(rejected) + "/1000 mutants rejected");
}

Verdict determinism() {
  Check c;
  const auto dir = testing::fresh_dir("acc_det");
  testing::write_file(dir / "l3.json", kLenetL3);
  std::mt19937_64 rng(5);
  write_matrix_bin(dir / "wgt_L3.bin", random_matrix(400, 120, rng, InputRange::Int8));
  for (const char* out : {"a", "b"}) {
    const auto r = vtac("compile --ir " + (dir / "l3.json").string() + " --config desk --out " + (dir / out).string() +
                        " --emit-plan");
    c.expect(r.exit_code == 0, std::string("compile ") + out + ": " + r.out);
  }
  int files = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto other = dir / "b" / entry.path().filename();
    c.expect(fs::exists(other) && testing::read_file(entry.path()) == testing::read_file(other),
             entry.path().filename().string() + " differs");
    ++files;
  }
  c.expect(files > 0, "no artifacts written");
  int other_files = 0;
  for ([[maybe_unused]] const auto& entry : fs::directory_iterator(dir / "b")) ++other_files;
  c.expect(files == other_files, "artifact sets differ");
  fs::remove_all(dir);
  return c.verdict(std::to_string(files) + " artifact files byte-identical across two compiles");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"worked examples", worked_examples},
      {"oracle equivalence", oracle_equivalence},
      {"partition validity", partition_validity},
      {"uop invariance", uop_invariance},
      {"strategy symmetry", strategy_symmetry},
      {"partition counts", partition_counts},
      {"chain correctness", chain_correctness},
      {"grammar conformance", grammar_conformance},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t n = 0; n < criteria.size(); ++n) {
    Verdict v;
    try {
      v = criteria[n].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    if (!v.pass) ++failures;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << n + 1 << " (" << criteria[n].first
              << "): " << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
