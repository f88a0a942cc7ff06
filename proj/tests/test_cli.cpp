#include <random>

#include "doctest.h"
#include "harness.hpp"
#include "json.hpp"
#include "network.hpp"
#include "vta/matrix.hpp"
#include "vta/pipeline.hpp"

using namespace vta;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

testing::CommandResult vtac(const std::string& args) {
  return testing::run_command(std::string(VTAC_EXE) + " " + args + " 2>/dev/null");
}

constexpr const char* kGemm = R"({"NAME":"_g","MATRICES":{"A":[4,6,"input"],"B":[6,4,"input"],"C":[4,4,"output"]},
  "LOAD":{"INP":["A"],"WGT":["B"]},"GEMM":["C","A","B"],
  "ALU":{"C":[["MAX_IMM",[[0,1],0,8]]]},"STORE":{"C":["C"]}})";

struct Workspace {
  fs::path dir = testing::fresh_dir("cli");
  fs::path ir = dir / "g.json";
  Workspace() { testing::write_file(ir, kGemm); }
  ~Workspace() { fs::remove_all(dir); }
};

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("help and usage errors") {
    CHECK(vtac("--help").exit_code == 0);
    CHECK(vtac("").exit_code == 2);
    CHECK(vtac("frobnicate").exit_code == 2);
    Workspace w;
    CHECK(vtac("compile --ir " + w.ir.string() + " --config desk --out " + (w.dir / "o").string() + " --strategy 5")
              .exit_code == 2);
    CHECK(vtac("verify --ir " + w.ir.string() + " --config desk --strategies 1,9").exit_code == 2);
    CHECK(vtac("stats --shape 2x2 --config desk").exit_code == 2);
  }

  TEST_CASE("pipeline errors exit 1") {
    Workspace w;
    testing::write_file(w.dir / "bad.json", R"({"NAME":"_b","MATRICES":{}})");
    CHECK(vtac("compile --ir " + (w.dir / "bad.json").string() + " --config desk --out " + (w.dir / "o").string())
              .exit_code == 1);
    CHECK(vtac("compile --ir " + w.ir.string() + " --config " + (w.dir / "missing.json").string() + " --out " +
               (w.dir / "o").string())
              .exit_code == 1);
  }

  TEST_CASE("compile then run reproduces the reference") {
    Workspace w;
    const auto art = w.dir / "art";
    const auto c = vtac("compile --ir " + w.ir.string() + " --config desk --out " + art.string() + " --emit-plan");
    REQUIRE(c.exit_code == 0);
    const auto summary = json::parse(c.out);
    CHECK(summary["uops"] == 2 * 3 * 2 + 8);
    CHECK(summary["partitions"].get<int>() > 0);
    CHECK(fs::exists(art / "plan_g.json"));

    std::mt19937_64 rng(3);
    const auto program = parse_ir(kGemm);
    const auto inputs = random_matrices(program, rng, InputRange::Int32, true);
    std::vector<std::int32_t> flat;
    for (const auto* name : {"A", "B"}) {
      const auto& m = inputs.at(name);
      flat.insert(flat.end(), m.data.begin(), m.data.end());
    }
    write_int32_file(w.dir / "in.bin", flat);
    const auto out = w.dir / "out.bin";
    const auto r = vtac("run --artifacts " + art.string() + " --input " + (w.dir / "in.bin").string() + " --out " +
                        out.string());
    REQUIRE(r.exit_code == 0);
    CHECK(read_matrix_bin(out, 4, 4) == reference_eval(program, inputs, 2));

    const auto t = vtac("run --artifacts " + art.string() + " --input " + (w.dir / "in.bin").string() + " --out " +
                        out.string() + " --trace --digests");
    REQUIRE(t.exit_code == 0);
    std::istringstream lines(t.out);
    std::string first;
    std::getline(lines, first);
    CHECK(json::parse(first).contains("opcode"));
  }

  TEST_CASE("verify reports every case and is repeatable") {
    Workspace w;
    const std::string args = "verify --ir " + w.ir.string() + " --config desk --seeds 3 --strategies 1,2,3,4";
    const auto a = vtac(args);
    CHECK(a.exit_code == 0);
    CHECK(a.out.find("12/12 match") != std::string::npos);
    CHECK(vtac(args).out == a.out);
    const auto j = json::parse(vtac(args + " --json").out);
    CHECK(j["matched"] == 12);
    CHECK(j["total"] == 12);
  }

  TEST_CASE("verify flags a corrupted weight file") {
    Workspace w;
    const auto art = w.dir / "art";
    testing::write_file(w.dir / "f.json", R"({"NAME":"_f","MATRICES":{"A":[2,2,"input"],"B":[2,2,"w.bin"],
      "C":[2,2,"output"]},"LOAD":{"INP":["A"],"WGT":["B"]},"GEMM":["C","A","B"],"STORE":{"C":["C"]}})");
    write_matrix_bin(w.dir / "w.bin", Matrix(2, 2));
    REQUIRE(vtac("compile --ir " + (w.dir / "f.json").string() + " --config desk --out " + art.string()).exit_code ==
            0);
    Matrix ones(2, 2);
    for (auto& v : ones.data) v = 1;
    write_matrix_bin(w.dir / "w.bin", ones);
    const auto r = vtac("verify --ir " + (w.dir / "f.json").string() + " --config desk --seeds 2 --artifacts " +
                        art.string() + " --json");
    CHECK(r.exit_code == 1);
    const auto j = json::parse(r.out);
    CHECK(j["status"] != "match");
    CHECK(j["first_divergence"].contains("row"));
  }

  TEST_CASE("stats lists all strategies") {
    const auto r = vtac("stats --shape 2x8x2 --config desk --json");
    REQUIRE(r.exit_code == 0);
    const auto j = json::parse(r.out);
    REQUIRE(j["strategies"].size() == 4);
    for (const auto& s : j["strategies"]) CHECK(s["uops"] == 32);
    CHECK(vtac("stats --shape 2x8x2 --config desk").out.find("strategy") != std::string::npos);
  }

  TEST_CASE("chain writes the network output and a summary") {
    std::mt19937_64 rng(8);
    const auto dir = testing::fresh_dir("cli_chain");
    const auto net = testing::two_layer_network(dir, 2, rng);
    const auto out = dir / "out";
    const auto r = vtac("chain --manifest " + net.manifest.string() + " --config desk --input " +
                        net.input_file.string() + " --out " + out.string() + " --json");
    REQUIRE(r.exit_code == 0);
    CHECK(read_matrix_bin(out / "output.bin", 1, 4) == net.expected);
    CHECK(fs::exists(out / "layer0.bin"));
    CHECK(json::parse(r.out)["layers"].size() == 2);
    fs::remove_all(dir);
  }

  TEST_CASE("compile output is byte-identical across runs") {
    Workspace w;
    REQUIRE(vtac("compile --ir " + w.ir.string() + " --config desk --out " + (w.dir / "a").string()).exit_code == 0);
    REQUIRE(vtac("compile --ir " + w.ir.string() + " --config desk --out " + (w.dir / "b").string()).exit_code == 0);
    for (const auto& e : fs::directory_iterator(w.dir / "a")) {
      CHECK(testing::read_file(e.path()) == testing::read_file(w.dir / "b" / e.path().filename()));
    }
  }
}
