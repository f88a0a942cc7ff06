#include "vta/oracle.hpp"

#include <algorithm>
#include <vector>

#include "vta/error.hpp"

namespace vta {

namespace {

// Padded dense array with its own indexing; nothing here is shared with
// the compiler or the simulator.
struct Dense {
  long long rows = 0;
  long long cols = 0;
  std::vector<std::uint32_t> v;

  Dense(long long r, long long c) : rows(r), cols(c), v(static_cast<std::size_t>(r * c), 0u) {}
  std::uint32_t& operator()(long long r, long long c) { return v[static_cast<std::size_t>(r * cols + c)]; }
  std::uint32_t operator()(long long r, long long c) const { return v[static_cast<std::size_t>(r * cols + c)]; }
};

long long ceil_to(long long n, long long m) { return (n + m - 1) / m * m; }

Dense padded(const Matrix& m, int bs) {
  Dense d(ceil_to(m.rows, bs), ceil_to(m.cols, bs));
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) d(r, c) = static_cast<std::uint32_t>(m.data[static_cast<std::size_t>(r) * m.cols + c]);
  }
  return d;
}

std::vector<long long> indices(const std::vector<LoadDescriptor>& ds) {
  std::vector<long long> out;
  for (const auto& d : ds) {
    for (long long j = 0; j < d.count; ++j) out.push_back(d.start + j * d.stride);
  }
  return out;
}

// Block q of the result is block order[q] of the source (tiles of bs x bs,
// row-major tile numbering).
Dense gather_tiles(const Dense& src, const std::vector<long long>& order, int bs) {
  Dense out(src.rows, src.cols);
  const long long tiles_per_row = src.cols / bs;
  for (std::size_t q = 0; q < order.size(); ++q) {
    const long long dr = static_cast<long long>(q) / tiles_per_row * bs;
    const long long dc = static_cast<long long>(q) % tiles_per_row * bs;
    const long long sr = order[q] / tiles_per_row * bs;
    const long long sc = order[q] % tiles_per_row * bs;
    for (int u = 0; u < bs; ++u) {
      for (int w = 0; w < bs; ++w) out(dr + u, dc + w) = src(sr + u, sc + w);
    }
  }
  return out;
}

std::uint32_t alu(AluOpcode op, std::uint32_t x, std::uint32_t y) {
  const auto sx = static_cast<std::int32_t>(x);
  const auto sy = static_cast<std::int32_t>(y);
  switch (op) {
    case AluOpcode::Max: return sx >= sy ? x : y;
    case AluOpcode::Min: return sx <= sy ? x : y;
    case AluOpcode::Add: return x + y;
    case AluOpcode::Mul: return x * y;
    case AluOpcode::Shr: {
      const unsigned s = y % 32u;
      // Sign-fill by hand: shift the magnitude and restore the high bits.
      if (s == 0) return x;
      const std::uint32_t logical = x >> s;
      return (x & 0x80000000u) ? logical | ~(0xffffffffu >> s) : logical;
    }
  }
  return x;
}

const Matrix& input(const std::map<std::string, Matrix>& inputs, const IrProgram& p, const std::string& name) {
  const auto it = inputs.find(name);
  if (it == inputs.end()) throw MissingInputError("no data for matrix '" + name + "'");
  const auto* decl = p.find(name);
  if (decl && (it->second.rows != decl->rows || it->second.cols != decl->cols)) {
    throw ShapeError("matrix '" + name + "' data is " + std::to_string(it->second.rows) + "x" +
                     std::to_string(it->second.cols) + ", declared " + std::to_string(decl->rows) + "x" +
                     std::to_string(decl->cols));
  }
  return it->second;
}

}  // namespace

Matrix reference_eval(const IrProgram& p, const std::map<std::string, Matrix>& inputs, int bs) {
  if (bs < 1) throw ConfigError("block size must be positive");
  const auto& out_decl = p.output();
  Dense c(ceil_to(out_decl.rows, bs), ceil_to(out_decl.cols, bs));
  const long long segs = c.cols / bs;  // bs-wide segments per row

  // A vector is the bs-element segment s of row r, numbered r * segs + s.
  auto vec_get = [&](const Dense& m, long long idx, int e) { return m(idx / segs, idx % segs * bs + e); };
  auto vec_ref = [&](Dense& m, long long idx, int e) -> std::uint32_t& { return m(idx / segs, idx % segs * bs + e); };

  if (p.acc) {
    const Dense x = padded(input(inputs, p, p.acc->matrix), bs);
    if (p.acc->descriptors.empty()) {
      c = x;
    } else {
      const long long x_segs = x.cols / bs;
      const auto src = indices(p.acc->descriptors);
      for (std::size_t r = 0; r < src.size(); ++r) {
        for (int e = 0; e < bs; ++e) {
          vec_ref(c, static_cast<long long>(r), e) = x(src[r] / x_segs, src[r] % x_segs * bs + e);
        }
      }
    }
  }

  if (p.gemm) {
    Dense a = padded(input(inputs, p, p.gemm->src), bs);
    if (p.inp && !p.inp->descriptors.empty()) a = gather_tiles(a, indices(p.inp->descriptors), bs);
    Dense b(a.cols, c.cols);
    if (p.gemm->scalar()) {
      const auto s = static_cast<std::uint32_t>(std::get<std::int32_t>(p.gemm->rhs));
      for (long long k = 0; k < b.rows; ++k) {
        for (long long j = 0; j < b.cols; ++j) b(k, j) = (k % bs == j % bs) ? s : 0u;
      }
    } else {
      b = padded(input(inputs, p, std::get<std::string>(p.gemm->rhs)), bs);
      if (p.wgt && !p.wgt->descriptors.empty()) b = gather_tiles(b, indices(p.wgt->descriptors), bs);
    }
    for (long long i = 0; i < c.rows; ++i) {
      for (long long k = 0; k < a.cols; ++k) {
        const std::uint32_t aik = a(i, k);
        if (aik == 0) continue;
        for (long long j = 0; j < c.cols; ++j) c(i, j) += aik * b(k, j);
      }
    }
  }

  if (p.alu) {
    if (std::holds_alternative<AddAcc>(p.alu->body)) {
      const Dense y = padded(input(inputs, p, *p.acc->second), bs);
      for (std::size_t n = 0; n < c.v.size(); ++n) c.v[n] += y.v[n];
    } else {
      for (const auto& d : std::get<std::vector<AluDecl>>(p.alu->body)) {
        for (long long j = 0; j < d.iterations; ++j) {
          const long long x = d.dst.start + j * d.dst.stride;
          const long long y = d.src.start + j * d.src.stride;
          for (int e = 0; e < bs; ++e) {
            const std::uint32_t rhs = d.immediate ? static_cast<std::uint32_t>(d.scalar) : vec_get(c, y, e);
            vec_ref(c, x, e) = alu(d.op, vec_get(c, x, e), rhs);
          }
        }
      }
    }
  }

  std::vector<char> stored(static_cast<std::size_t>(c.rows * segs), 0);
  if (p.store.vectors) {
    for (long long v : indices(*p.store.vectors)) stored[static_cast<std::size_t>(v)] = 1;
  } else {
    std::fill(stored.begin(), stored.end(), 1);
  }
  Matrix out(out_decl.rows, out_decl.cols);
  for (int r = 0; r < out.rows; ++r) {
    for (int col = 0; col < out.cols; ++col) {
      if (stored[static_cast<std::size_t>(r * segs + col / bs)]) out.at(r, col) = static_cast<std::int32_t>(c(r, col));
    }
  }
  return out;
}

Comparison compare_bitwise(const Matrix& simulated, const Matrix& reference) {
  if (simulated.rows != reference.rows || simulated.cols != reference.cols) {
    throw ShapeError("cannot compare a " + std::to_string(simulated.rows) + "x" + std::to_string(simulated.cols) +
                     " result with a " + std::to_string(reference.rows) + "x" + std::to_string(reference.cols) +
                     " reference");
  }
  Comparison cmp;
  for (int r = 0; r < reference.rows; ++r) {
    for (int c = 0; c < reference.cols; ++c) {
      if (simulated.at(r, c) == reference.at(r, c)) continue;
      ++cmp.mismatches;
      if (!cmp.first) cmp.first = Divergence{r, c, simulated.at(r, c), reference.at(r, c)};
    }
  }
  cmp.match = cmp.mismatches == 0;
  return cmp;
}

nlohmann::json comparison_to_json(const Comparison& c) {
  nlohmann::json j = {{"status", c.match ? "match" : "mismatch"}, {"mismatches", c.mismatches}};
  if (c.first) {
    j["first_divergence"] = {{"row", c.first->row},
                             {"col", c.first->col},
                             {"simulated", c.first->simulated},
                             {"reference", c.first->reference}};
  } else {
    j["first_divergence"] = nullptr;
  }
  return j;
}

}  // namespace vta
