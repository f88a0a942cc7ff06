#include <random>

#include "doctest.h"
#include "vta/dram.hpp"
#include "vta/error.hpp"
#include "vta/ir.hpp"

using namespace vta;

namespace {

PaddedProgram layer(const std::string& a, int rows, int inner, int cols) {
  IrProgram p;
  p.name = "_l";
  p.matrices = {{a, rows, inner, SourceKind::Input, ""},
                {"B", inner, cols, SourceKind::File, "b.bin"},
                {"X", rows, cols, SourceKind::File, "x.bin"},
                {"C", rows, cols, SourceKind::Output, ""}};
  p.inp = BufferLoad{a, {}};
  p.wgt = BufferLoad{"B", {}};
  p.acc = AccLoad{"X", {}, std::nullopt};
  p.gemm = GemmClause{"C", a, std::string("B")};
  p.store.matrix = "C";
  return validate_shapes(p, VtaConfig{2, 4, 4, 8});
}

int visible(const DramImage& image) {
  int n = 0;
  for (const auto& r : image.regions) n += r.role != RegionRole::Scratch;
  return n;
}

void check_disjoint(const DramImage& image) {
  for (std::size_t i = 0; i < image.regions.size(); ++i) {
    const auto& a = image.regions[i];
    CHECK(a.offset % (a.bs * a.bs) == 0);
    CHECK(a.offset + a.length <= image.size);
    for (std::size_t j = i + 1; j < image.regions.size(); ++j) {
      const auto& b = image.regions[j];
      CHECK((a.offset + a.length <= b.offset || b.offset + b.length <= a.offset));
    }
  }
}

}  // namespace

TEST_SUITE("dram") {
  TEST_CASE("one program with A, B, X, C gets four ordered regions") {
    const auto image = allocate_dram({layer("A", 3, 5, 3)});
    CHECK(visible(image) == 4);
    check_disjoint(image);
    const auto& x = image.region(0, "X");
    const auto& c = image.region(0, "C");
    CHECK(x.offset < c.offset);
    CHECK(x.role == RegionRole::Bias);
    CHECK(image.region(0, "B").role == RegionRole::Weight);
    CHECK(image.region(0, "A").role == RegionRole::Input);
    CHECK(c.role == RegionRole::Output);
    CHECK(c.padded_rows == 4);
    CHECK(c.length == 16);
  }

  TEST_CASE("a shared tensor between two layers is one region") {
    const auto l0 = layer("A", 4, 4, 6);
    const auto l1 = layer("H", 4, 6, 2);
    const auto image = allocate_dram({l0, l1}, {{1, "H", 0}});
    CHECK(visible(image) == 7);
    check_disjoint(image);
    CHECK(image.region_of(1, "H") == image.region_of(0, "C"));
  }

  TEST_CASE("alias shape mismatch") {
    const auto l0 = layer("A", 4, 4, 6);
    const auto l1 = layer("H", 4, 8, 2);
    CHECK_THROWS_AS(allocate_dram({l0, l1}, {{1, "H", 0}}), ShapeError);
  }

  TEST_CASE("layout JSON round trip") {
    const auto image = allocate_dram({layer("A", 3, 5, 3), layer("A", 2, 2, 2)});
    CHECK(dram_from_json(dram_to_json(image)) == image);
  }

  TEST_CASE("padding never changes logical values") {
    std::mt19937_64 rng(5);
    const auto image = allocate_dram({layer("A", 3, 5, 3)});
    const auto& r = image.region(0, "A");
    std::vector<std::int32_t> dram(static_cast<std::size_t>(image.size), -1);
    Matrix m(3, 5);
    for (auto& v : m.data) v = static_cast<std::int32_t>(rng());
    place_matrix(dram, r, m);
    CHECK(extract_matrix(dram, r) == m);
    CHECK(dram[r.offset + 5] == 0);                   // padding column of row 0
    CHECK(dram[r.offset + 3 * r.padded_cols] == 0);  // padding row
    dram[r.offset + 5] = 9;
    clear_padding(dram, r);
    CHECK(dram[r.offset + 5] == 0);
    CHECK(extract_matrix(dram, r) == m);
  }
}
