#include "vta/simulator.hpp"

#include <cstdio>
#include <ostream>

#include "json.hpp"
#include "vta/blocking.hpp"
#include "vta/error.hpp"

namespace vta {

namespace {

std::uint64_t fnv1a(const std::vector<std::int32_t>& values) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::int32_t v : values) {
    auto u = static_cast<std::uint32_t>(v);
    for (int b = 0; b < 4; ++b) {
      h ^= (u >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

const char* opcode_name(const VtaOp& op) {
  switch (op.index()) {
    case 0: return "LOAD";
    case 1: return "GEMM";
    case 2: return "ALU";
    default: return "STORE";
  }
}

std::size_t item_count(const VtaOp& op) {
  if (const auto* l = std::get_if<LoadOp>(&op)) return l->sources.size();
  if (const auto* s = std::get_if<StoreOp>(&op)) return s->slots.size();
  return 1;
}

}  // namespace

Machine::Machine(const VtaConfig& config, const DramImage& image, std::vector<std::int32_t> dram)
    : config_(config), image_(image), bs_(config.bs), dram_(std::move(dram)) {
  config_.validate();
  if (static_cast<long long>(dram_.size()) < image.size) {
    throw ExecutionError(0, "DRAM holds " + std::to_string(dram_.size()) + " elements, the layout needs " +
                                std::to_string(image.size));
  }
  const auto block = static_cast<std::size_t>(bs_) * bs_;
  inp_.assign(block * config.inp_size, 0);
  wgt_.assign(block * config.wgt_size, 0);
  acc_.assign(static_cast<std::size_t>(bs_) * config.acc_size, 0);
  inp_valid_.assign(config.inp_size, 0);
  wgt_valid_.assign(config.wgt_size, 0);
  acc_valid_.assign(config.acc_size, 0);
}

void Machine::fail(const std::string& what) const { throw ExecutionError(executed_, what); }

const Region& Machine::region(int index) const {
  if (index < 0 || index >= static_cast<int>(image_.regions.size())) {
    fail("region " + std::to_string(index) + " does not exist");
  }
  const auto& r = image_.regions[index];
  if (r.bs != bs_) fail("region '" + r.name + "' was laid out for bs=" + std::to_string(r.bs));
  return r;
}

std::uint64_t Machine::digest(std::optional<Buffer> buffer) const {
  if (!buffer) return fnv1a(dram_);
  switch (*buffer) {
    case Buffer::Inp: return fnv1a(inp_);
    case Buffer::Wgt: return fnv1a(wgt_);
    case Buffer::Acc: return fnv1a(acc_);
  }
  return 0;
}

void Machine::step(const VtaOp& op) {
  std::visit(
      [this](const auto& o) {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, LoadOp>) load(o);
        if constexpr (std::is_same_v<T, GemmOp>) gemm(o);
        if constexpr (std::is_same_v<T, AluOp>) alu(o);
        if constexpr (std::is_same_v<T, StoreOp>) store(o);
      },
      op);
  ++executed_;
}

void Machine::load(const LoadOp& op) {
  const auto& r = region(op.region);
  const int pitch = r.pitch();
  if (op.buffer != Buffer::Acc) {
    if (op.item != Item::Block) fail("INP and WGT only load blocks");
    auto& data = op.buffer == Buffer::Inp ? inp_ : wgt_;
    auto& valid = op.buffer == Buffer::Inp ? inp_valid_ : wgt_valid_;
    for (std::size_t n = 0; n < op.sources.size(); ++n) {
      const int k = op.sources[n];
      const long long slot = op.dest_slot + static_cast<long long>(n);
      if (k < 0 || k >= r.blocks()) fail("block " + std::to_string(k) + " outside region '" + r.name + "'");
      if (slot < 0 || slot >= static_cast<long long>(valid.size())) {
        fail(std::string(to_string(op.buffer)) + " slot " + std::to_string(slot) + " out of range");
      }
      const long long row0 = static_cast<long long>(k / pitch) * bs_;
      const long long col0 = static_cast<long long>(k % pitch) * bs_;
      auto* dst = &data[static_cast<std::size_t>(slot) * bs_ * bs_];
      for (int u = 0; u < bs_; ++u) {
        std::copy_n(dram_.begin() + element(r, row0 + u, col0), bs_, dst + static_cast<std::ptrdiff_t>(u) * bs_);
      }
      valid[slot] = 1;
    }
    return;
  }
  const int span = op.item == Item::Block ? bs_ : 1;
  for (std::size_t n = 0; n < op.sources.size(); ++n) {
    const int k = op.sources[n];
    const long long slot = op.dest_slot + static_cast<long long>(n) * span;
    if (slot < 0 || slot + span > config_.acc_size) fail("ACC slot " + std::to_string(slot) + " out of range");
    if (op.item == Item::Block) {
      if (k < 0 || k >= r.blocks()) fail("block " + std::to_string(k) + " outside region '" + r.name + "'");
      const long long row0 = static_cast<long long>(k / pitch) * bs_;
      const long long col0 = static_cast<long long>(k % pitch) * bs_;
      for (int u = 0; u < bs_; ++u) {
        std::copy_n(dram_.begin() + element(r, row0 + u, col0), bs_, acc_.begin() + (slot + u) * bs_);
        acc_valid_[slot + u] = 1;
      }
    } else {
      if (k < 0 || k >= r.vectors()) fail("vector " + std::to_string(k) + " outside region '" + r.name + "'");
      std::copy_n(dram_.begin() + element(r, k / pitch, static_cast<long long>(k % pitch) * bs_), bs_,
                  acc_.begin() + slot * bs_);
      acc_valid_[slot] = 1;
    }
  }
}

void Machine::gemm(const GemmOp& op) {
  if (op.inp_slot < 0 || op.inp_slot >= config_.inp_size || !inp_valid_[op.inp_slot]) {
    fail("GEMM reads INP slot " + std::to_string(op.inp_slot) + " which holds no data");
  }
  if (op.wgt_slot < 0 || op.wgt_slot >= config_.wgt_size || !wgt_valid_[op.wgt_slot]) {
    fail("GEMM reads WGT slot " + std::to_string(op.wgt_slot) + " which holds no data");
  }
  if (op.acc_slot < 0 || op.acc_slot + bs_ > config_.acc_size) {
    fail("GEMM ACC slot " + std::to_string(op.acc_slot) + " out of range");
  }
  for (int u = 0; u < bs_; ++u) {
    if (!acc_valid_[op.acc_slot + u]) fail("GEMM accumulates into ACC slot " + std::to_string(op.acc_slot + u) +
                                           " which holds no data");
  }
  const auto block = static_cast<std::size_t>(bs_) * bs_;
  const auto* a = &inp_[op.inp_slot * block];
  const auto* b = &wgt_[op.wgt_slot * block];
  for (int u = 0; u < bs_; ++u) {
    auto* c = &acc_[static_cast<std::size_t>(op.acc_slot + u) * bs_];
    for (int k = 0; k < bs_; ++k) {
      const std::int32_t x = a[u * bs_ + k];
      for (int v = 0; v < bs_; ++v) c[v] = wrap_add(c[v], wrap_mul(x, b[k * bs_ + v]));
    }
  }
}

void Machine::alu(const AluOp& op) {
  auto check = [&](int slot, const char* role) {
    if (slot < 0 || slot >= config_.acc_size) fail(std::string("ALU ") + role + " slot out of range");
    if (!acc_valid_[slot]) fail(std::string("ALU ") + role + " ACC slot " + std::to_string(slot) + " holds no data");
  };
  check(op.dst_slot, "destination");
  if (!op.immediate) check(op.src_slot, "source");
  auto* x = &acc_[static_cast<std::size_t>(op.dst_slot) * bs_];
  const auto* y = &acc_[static_cast<std::size_t>(op.src_slot) * bs_];
  for (int e = 0; e < bs_; ++e) x[e] = apply_alu(op.op, x[e], op.immediate ? op.imm : y[e]);
}

void Machine::store(const StoreOp& op) {
  const auto& r = region(op.region);
  if (op.slots.size() != op.dests.size()) fail("STORE slot and destination lists differ in length");
  const int pitch = r.pitch();
  const int span = op.item == Item::Block ? bs_ : 1;
  for (std::size_t n = 0; n < op.slots.size(); ++n) {
    const int slot = op.slots[n];
    const int k = op.dests[n];
    if (slot < 0 || slot + span > config_.acc_size) fail("STORE ACC slot " + std::to_string(slot) + " out of range");
    for (int u = 0; u < span; ++u) {
      if (!acc_valid_[slot + u]) fail("STORE reads ACC slot " + std::to_string(slot + u) + " which holds no data");
    }
    if (op.item == Item::Block) {
      if (k < 0 || k >= r.blocks()) fail("block " + std::to_string(k) + " outside region '" + r.name + "'");
      const long long row0 = static_cast<long long>(k / pitch) * bs_;
      const long long col0 = static_cast<long long>(k % pitch) * bs_;
      for (int u = 0; u < bs_; ++u) {
        std::copy_n(acc_.begin() + static_cast<long long>(slot + u) * bs_, bs_,
                    dram_.begin() + element(r, row0 + u, col0));
      }
    } else {
      if (k < 0 || k >= r.vectors()) fail("vector " + std::to_string(k) + " outside region '" + r.name + "'");
      std::copy_n(acc_.begin() + static_cast<long long>(slot) * bs_, bs_,
                  dram_.begin() + element(r, k / pitch, static_cast<long long>(k % pitch) * bs_));
    }
  }
}

RunResult run(const OpStream& stream, const DramImage& image, const VtaConfig& config, std::vector<std::int32_t> dram,
              const TraceOptions& options) {
  Machine m(config, image, std::move(dram));
  ExecutionTrace trace;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& op = stream[i];
    m.step(op);
    switch (op.index()) {
      case 0: ++trace.loads; break;
      case 1: ++trace.gemms; break;
      case 2: ++trace.alus; break;
      default: ++trace.stores; break;
    }
    if (options.sink) {
      nlohmann::ordered_json rec = {{"index", i}, {"opcode", opcode_name(op)}, {"count", item_count(op)}};
      if (const auto* l = std::get_if<LoadOp>(&op)) rec["buffer"] = std::string(to_string(l->buffer));
      if (options.digests) {
        std::optional<Buffer> target = Buffer::Acc;
        if (const auto* l = std::get_if<LoadOp>(&op)) target = l->buffer;
        if (std::holds_alternative<StoreOp>(op)) target = std::nullopt;
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(m.digest(target)));
        rec["digest"] = hex;
      }
      *options.sink << rec.dump() << '\n';
    }
  }
  trace.executed = m.executed();
  return {m.take_dram(), trace};
}

void verify_residency(const OpStream& stream, const DramImage& image, const VtaConfig& config) {
  config.validate();
  const int bs = config.bs;
  std::vector<char> inp(config.inp_size, 0);
  std::vector<char> wgt(config.wgt_size, 0);
  std::vector<char> acc(config.acc_size, 0);
  auto region = [&](std::size_t i, int index) -> const Region& {
    if (index < 0 || index >= static_cast<int>(image.regions.size())) {
      throw ExecutionError(i, "region " + std::to_string(index) + " does not exist");
    }
    return image.regions[index];
  };
  auto need = [](std::size_t i, const std::vector<char>& valid, long long slot, int span, const char* what) {
    if (slot < 0 || slot + span > static_cast<long long>(valid.size())) {
      throw ExecutionError(i, std::string(what) + " slot " + std::to_string(slot) + " out of range");
    }
    for (int u = 0; u < span; ++u) {
      if (!valid[slot + u]) {
        throw ExecutionError(i, std::string(what) + " slot " + std::to_string(slot + u) + " is read before any load");
      }
    }
  };
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto& op = stream[i];
    if (const auto* l = std::get_if<LoadOp>(&op)) {
      const auto& r = region(i, l->region);
      auto& valid = l->buffer == Buffer::Inp ? inp : l->buffer == Buffer::Wgt ? wgt : acc;
      if (l->buffer != Buffer::Acc && l->item != Item::Block) throw ExecutionError(i, "INP and WGT only load blocks");
      const int span = l->buffer == Buffer::Acc && l->item == Item::Block ? bs : 1;
      const int limit = l->item == Item::Block ? r.blocks() : r.vectors();
      for (std::size_t n = 0; n < l->sources.size(); ++n) {
        if (l->sources[n] < 0 || l->sources[n] >= limit) throw ExecutionError(i, "LOAD source index out of range");
        const long long slot = l->dest_slot + static_cast<long long>(n) * span;
        if (slot < 0 || slot + span > static_cast<long long>(valid.size())) {
          throw ExecutionError(i, "LOAD destination slot out of range");
        }
        std::fill_n(valid.begin() + slot, span, 1);
      }
    } else if (const auto* g = std::get_if<GemmOp>(&op)) {
      need(i, inp, g->inp_slot, 1, "INP");
      need(i, wgt, g->wgt_slot, 1, "WGT");
      need(i, acc, g->acc_slot, bs, "ACC");
    } else if (const auto* a = std::get_if<AluOp>(&op)) {
      need(i, acc, a->dst_slot, 1, "ACC");
      if (!a->immediate) need(i, acc, a->src_slot, 1, "ACC");
    } else {
      const auto& s = std::get<StoreOp>(op);
      const auto& r = region(i, s.region);
      if (s.slots.size() != s.dests.size()) throw ExecutionError(i, "STORE list lengths differ");
      const int span = s.item == Item::Block ? bs : 1;
      const int limit = s.item == Item::Block ? r.blocks() : r.vectors();
      for (std::size_t n = 0; n < s.slots.size(); ++n) {
        need(i, acc, s.slots[n], span, "ACC");
        if (s.dests[n] < 0 || s.dests[n] >= limit) throw ExecutionError(i, "STORE destination index out of range");
      }
    }
  }
}

}  // namespace vta
