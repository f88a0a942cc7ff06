#include <climits>

#include "doctest.h"
#include "vta/error.hpp"
#include "vta/ir.hpp"
#include "vta/oracle.hpp"

using namespace vta;

namespace {

Matrix make(int rows, int cols, std::initializer_list<std::int32_t> values) {
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data.begin());
  return m;
}

}  // namespace

TEST_SUITE("oracle") {
  TEST_CASE("ALU list on a 6x2 matrix") {
    const auto p = parse_ir(R"({"NAME":"_a","MATRICES":{"X":[6,2,"input"],"C":[6,2,"output"]},
      "LOAD":{"ACC":["X"]},
      "ALU":{"C":[["MAX",[[0,0],[1,0],1]],["MAX_IMM",[[0,0],1,1]],["MAX",[[0,2],[1,2],3]],["MAX_IMM",[[0,1],0,6]]]},
      "STORE":{"C":["C"]}})");
    const auto x = make(6, 2, {-8, 6, -7, 5, -6, 4, -5, 3, -3, 2, -2, 1});
    const auto c = reference_eval(p, {{"X", x}}, 2);
    CHECK(c == make(6, 2, {1, 6, 0, 5, 0, 4, 0, 3, 0, 2, 0, 1}));
  }

  TEST_CASE("ADD_ACC of two 2x2 matrices") {
    const auto p = parse_ir(R"({"NAME":"_add","MATRICES":{"A":[2,2,"input"],"B":[2,2,"input"],"C":[2,2,"output"]},
      "LOAD":{"ACC":["A","B"]},"ALU":{"C":[["ADD_ACC",["A","B"]]]},"STORE":{"C":["C"]}})");
    const auto c = reference_eval(p, {{"A", make(2, 2, {1, 2, 3, 4})}, {"B", make(2, 2, {1, -2, 2, -1})}}, 2);
    CHECK(c == make(2, 2, {2, 0, 5, 3}));
  }

  TEST_CASE("GEMM with bias, wraparound and partial store") {
    const auto p = parse_ir(R"({"NAME":"_g","MATRICES":{"A":[1,2,"input"],"B":[2,2,"input"],"X":[1,2,"input"],
      "C":[1,2,"output"]},"LOAD":{"INP":["A"],"WGT":["B"],"ACC":["X"]},"GEMM":["C","A","B"],
      "STORE":{"C":[[[0,1],1]]}})");
    const auto a = make(1, 2, {INT32_MAX, 2});
    const auto b = make(2, 2, {1, 3, 5, 7});
    const auto x = make(1, 2, {1, -1});
    const auto c = reference_eval(p, {{"A", a}, {"B", b}, {"X", x}}, 2);
    CHECK(c.at(0, 0) == static_cast<std::int32_t>(static_cast<std::uint32_t>(INT32_MAX) + 10u + 1u));
    CHECK(c.at(0, 1) == static_cast<std::int32_t>(3u * static_cast<std::uint32_t>(INT32_MAX) + 14u - 1u));

    // bs = 1: each column is its own vector; store only vector 0.
    const auto one = reference_eval(p, {{"A", a}, {"B", b}, {"X", x}}, 1);
    CHECK(one.at(0, 0) == c.at(0, 0));
    CHECK(one.at(0, 1) == 0);
  }

  TEST_CASE("scalar GEMM multiplies every block of A by b*I") {
    const auto p = parse_ir(R"({"NAME":"_s","MATRICES":{"A":[3,3,"input"],"C":[3,3,"output"]},
      "LOAD":{"INP":["A"]},"GEMM":["C","A",-2],"STORE":{"C":["C"]}})");
    const auto a = make(3, 3, {1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto c = reference_eval(p, {{"A", a}}, 2);
    // Block column j of C sums b * A over every block column k of A.
    CHECK(c == make(3, 3, {-8, -4, -8, -20, -10, -20, -32, -16, -32}));

    const auto one = parse_ir(R"({"NAME":"_s","MATRICES":{"A":[2,2,"input"],"C":[2,2,"output"]},
      "LOAD":{"INP":["A"]},"GEMM":["C","A",-2],"STORE":{"C":["C"]}})");
    CHECK(reference_eval(one, {{"A", make(2, 2, {1, 2, 3, 4})}}, 2) == make(2, 2, {-2, -4, -6, -8}));
  }

  TEST_CASE("SHR sign-fills") {
    const auto p = parse_ir(R"({"NAME":"_r","MATRICES":{"X":[1,2,"input"],"C":[1,2,"output"]},
      "LOAD":{"ACC":["X"]},"ALU":{"C":[["SHR_IMM",[[0,0],33,1]]]},"STORE":{"C":["C"]}})");
    const auto c = reference_eval(p, {{"X", make(1, 2, {-7, 7})}}, 2);
    CHECK(c == make(1, 2, {-4, 3}));
  }

  TEST_CASE("missing data and shape disagreements") {
    const auto p = parse_ir(R"({"NAME":"_s","MATRICES":{"A":[3,3,"input"],"C":[3,3,"output"]},
      "LOAD":{"INP":["A"]},"GEMM":["C","A",1],"STORE":{"C":["C"]}})");
    CHECK_THROWS_AS(reference_eval(p, {}, 2), MissingInputError);
    CHECK_THROWS_AS(reference_eval(p, {{"A", Matrix(2, 3)}}, 2), ShapeError);
  }

  TEST_CASE("comparison reports the first divergence") {
    auto a = make(2, 2, {1, 2, 3, 4});
    auto b = a;
    CHECK(compare_bitwise(a, b).match);
    b.at(1, 0) = 9;
    b.at(1, 1) = 9;
    const auto cmp = compare_bitwise(a, b);
    CHECK_FALSE(cmp.match);
    CHECK(cmp.mismatches == 2);
    REQUIRE(cmp.first);
    CHECK(cmp.first->row == 1);
    CHECK(cmp.first->col == 0);
    CHECK(cmp.first->simulated == 3);
    CHECK(cmp.first->reference == 9);
    const auto j = comparison_to_json(cmp);
    CHECK(j["status"] == "mismatch");
    CHECK(j["first_divergence"]["col"] == 0);
    CHECK_THROWS_AS(compare_bitwise(a, Matrix(2, 3)), ShapeError);
  }
}
