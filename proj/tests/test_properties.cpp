#include <algorithm>
#include <random>

#include "doctest.h"
#include "fuzz.hpp"
#include "harness.hpp"
#include "vta/partition.hpp"

using namespace vta;

namespace {

Matrix simulate_plan(const LayerPlan& plan, const MatrixSet& inputs) {
  Compiled c;
  c.plan = plan;
  c.image = allocate_dram({plan.program});
  c.lowered = lower_layer(plan, c.image, 0);
  c.stats = count_stats(c.lowered.stream, c.image);
  return simulate(c, inputs);
}

Matrix wrap_sum(const Matrix& a, const Matrix& b) {
  Matrix out = a;
  for (std::size_t n = 0; n < a.data.size(); ++n) out.data[n] = wrap_add(a.data[n], b.data[n]);
  return out;
}

}  // namespace

TEST_SUITE("properties") {
  TEST_CASE("simulation equals the reference on random programs") {
    std::mt19937_64 rng(101);
    int cases = 0;
    for (int n = 0; n < 120; ++n) {
      const auto variant = testing::kAllVariants[n % 5];
      const int bs = n % 3 == 0 ? 4 : 2;
      const auto p = testing::random_program(rng, variant, {bs, 4, true, true});
      const auto config = testing::random_config(rng, bs);
      const auto range = n % 2 ? InputRange::Int32 : InputRange::Int8;
      const int strategy = 1 + n % 4;
      const auto cmp = testing::simulate_vs_oracle(p, config, strategy, rng(), range);
      INFO(testing::to_string(variant) << " strategy " << strategy << "\n" << render_ir(p));
      CHECK(cmp.match);
      ++cases;
    }
    CHECK(cases == 120);
  }

  TEST_CASE("GEMM is linear in its weight operand") {
    std::mt19937_64 rng(102);
    for (int n = 0; n < 20; ++n) {
      const BlockShape shape{static_cast<int>(rng() % 4) + 1, static_cast<int>(rng() % 4) + 1,
                             static_cast<int>(rng() % 4) + 1};
      const auto p = synthetic_gemm(shape, 2);
      const auto compiled = compile_program(p, VtaConfig{2, 3, 3, 6}, 1 + n % 4);
      const auto& a_decl = p.matrices[0];
      const auto& b_decl = p.matrices[1];
      const auto a = random_matrix(a_decl.rows, a_decl.cols, rng, InputRange::Int32);
      const auto b1 = random_matrix(b_decl.rows, b_decl.cols, rng, InputRange::Int32);
      const auto b2 = random_matrix(b_decl.rows, b_decl.cols, rng, InputRange::Int32);
      const auto r1 = simulate(compiled, {{a_decl.name, a}, {b_decl.name, b1}});
      const auto r2 = simulate(compiled, {{a_decl.name, a}, {b_decl.name, b2}});
      const auto r12 = simulate(compiled, {{a_decl.name, a}, {b_decl.name, wrap_sum(b1, b2)}});
      CHECK(r12 == wrap_sum(r1, r2));
    }
  }

  TEST_CASE("result does not depend on the order of offloads or of products within one") {
    std::mt19937_64 rng(103);
    for (int n = 0; n < 30; ++n) {
      const auto variant = n % 2 ? testing::Variant::Gemm : testing::Variant::GemmAlu;
      const auto p = testing::random_program(rng, variant, {2, 4, true, true});
      const VtaConfig config{2, 3, 3, 6};
      auto plan = plan_layer(p, config, 1 + n % 4);
      const auto inputs = random_matrices(p, rng, InputRange::Int32, true);
      const auto base = simulate_plan(plan, inputs);
      REQUIRE(plan.gemm);
      std::shuffle(plan.gemm->partitions.begin(), plan.gemm->partitions.end(), rng);
      for (auto& part : plan.gemm->partitions) std::shuffle(part.triples.begin(), part.triples.end(), rng);
      CHECK_FALSE(validate_plan(*plan.gemm, plan.gemm->shape, config));
      CHECK(simulate_plan(plan, inputs) == base);
    }
  }

  TEST_CASE("padding does not leak into logical results") {
    std::mt19937_64 rng(104);
    for (int n = 0; n < 20; ++n) {
      auto p = testing::random_program(rng, n % 2 ? testing::Variant::Gemm : testing::Variant::Scalar,
                                       {2, 3, false, false});
      // Same data zero-extended to block multiples.
      auto q = p;
      for (auto& m : q.matrices) {
        m.rows = (m.rows + 1) / 2 * 2;
        m.cols = (m.cols + 1) / 2 * 2;
      }
      const auto small = random_matrices(p, rng, InputRange::Int32, true);
      MatrixSet big;
      for (const auto& [name, m] : small) {
        const auto* d = q.find(name);
        Matrix e(d->rows, d->cols);
        for (int r = 0; r < m.rows; ++r) {
          for (int c = 0; c < m.cols; ++c) e.at(r, c) = m.at(r, c);
        }
        big[name] = e;
      }
      const VtaConfig config{2, 4, 4, 8};
      const auto rs = simulate(compile_program(p, config), small);
      const auto rb = simulate(compile_program(q, config), big);
      for (int r = 0; r < rs.rows; ++r) {
        for (int c = 0; c < rs.cols; ++c) CHECK(rs.at(r, c) == rb.at(r, c));
      }
    }
  }

  TEST_CASE("uops equal products plus ALU pairs for every strategy") {
    std::mt19937_64 rng(105);
    for (int n = 0; n < 40; ++n) {
      const auto p = testing::random_program(rng, testing::kAllVariants[n % 5], {2, 4, true, true});
      const auto config = testing::random_config(rng, 2);
      const auto pp = validate_shapes(p, config);
      const long long expected = (pp.gemm_shape ? pp.gemm_shape->triples() : 0) +
                                 static_cast<long long>(program_alu_pairs(pp).size());
      for (int s = 1; s <= 4; ++s) CHECK(compile_program(p, config, s).stats.uops == expected);
    }
  }

  TEST_CASE("strategies 3 and 4 mirror each other with INP and WGT swapped") {
    std::mt19937_64 rng(106);
    for (int n = 0; n < 25; ++n) {
      const BlockShape s{static_cast<int>(rng() % 6) + 1, static_cast<int>(rng() % 6) + 1,
                         static_cast<int>(rng() % 6) + 1};
      const auto config = testing::random_config(rng, 2);
      const auto three = compile_program(synthetic_gemm(s, 2), config, 3).stats.instructions;
      const VtaConfig mirrored{config.bs, config.wgt_size, config.inp_size, config.acc_size};
      const auto four =
          compile_program(synthetic_gemm({s.beta, s.lambda, s.alpha}, 2), mirrored, 4).stats.instructions;
      INFO(s.alpha << "x" << s.lambda << "x" << s.beta);
      CHECK(three == four);
    }
  }

  TEST_CASE("every compiled stream passes the residency check") {
    std::mt19937_64 rng(107);
    for (int n = 0; n < 60; ++n) {
      const auto p = testing::random_program(rng, testing::kAllVariants[n % 5], {2, 4, true, true});
      const auto config = testing::random_config(rng, 2);
      const auto c = compile_program(p, config, 1 + n % 4);
      CHECK_NOTHROW(verify_residency(c.lowered.stream, c.image, config));
    }
  }
}
