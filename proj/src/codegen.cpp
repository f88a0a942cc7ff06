#include "vta/codegen.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "vta/error.hpp"

namespace vta {

std::string_view to_string(Buffer b) {
  switch (b) {
    case Buffer::Inp: return "INP";
    case Buffer::Wgt: return "WGT";
    case Buffer::Acc: return "ACC";
  }
  return "?";
}

namespace {

struct LoadItem {
  int region;
  Item item;
  int index;
  int slot;
};

struct StoreItem {
  int region;
  Item item;
  int slot;
  int dest;
};

class Emitter {
 public:
  Emitter(OpStream& out, const VtaConfig& config) : out_(out), config_(config) {}

  void loads(Buffer buffer, const std::vector<LoadItem>& items) {
    for (const auto& it : items) check_slot(buffer, it.item, it.slot);
    std::size_t n = 0;
    while (n < items.size()) {
      LoadOp op{buffer, items[n].item, items[n].region, {items[n].index}, items[n].slot};
      const int step = slot_step(buffer, op.item);
      std::size_t m = n + 1;
      while (m < items.size() && items[m].region == op.region && items[m].item == op.item &&
             items[m].slot == items[m - 1].slot + step) {
        op.sources.push_back(items[m].index);
        ++m;
      }
      out_.push_back(std::move(op));
      n = m;
    }
  }

  void stores(const std::vector<StoreItem>& items) {
    for (const auto& it : items) check_slot(Buffer::Acc, it.item, it.slot);
    std::size_t n = 0;
    while (n < items.size()) {
      StoreOp op{items[n].item, {}, items[n].region, {}};
      std::size_t m = n;
      while (m < items.size() && items[m].region == op.region && items[m].item == op.item) {
        op.slots.push_back(items[m].slot);
        op.dests.push_back(items[m].dest);
        ++m;
      }
      out_.push_back(std::move(op));
      n = m;
    }
  }

  void gemm(int acc, int inp, int wgt) {
    check_slot(Buffer::Acc, Item::Block, acc);
    check_slot(Buffer::Inp, Item::Block, inp);
    check_slot(Buffer::Wgt, Item::Block, wgt);
    out_.push_back(GemmOp{acc, inp, wgt});
  }

  void alu(const AluPair& p, int dst_slot, int src_slot) {
    check_slot(Buffer::Acc, Item::Vector, dst_slot);
    const bool immediate = p.operand == AluOperand::Immediate;
    if (!immediate) check_slot(Buffer::Acc, Item::Vector, src_slot);
    out_.push_back(AluOp{p.op, dst_slot, immediate, immediate ? 0 : src_slot, immediate ? p.imm : 0});
  }

 private:
  int slot_step(Buffer b, Item item) const { return b == Buffer::Acc && item == Item::Block ? config_.bs : 1; }

  void check_slot(Buffer b, Item item, int slot) const {
    const long long cap = b == Buffer::Inp ? config_.inp_size : b == Buffer::Wgt ? config_.wgt_size : config_.acc_size;
    const int span = b == Buffer::Acc && item == Item::Block ? config_.bs : 1;
    if (slot < 0 || slot + span > cap) {
      throw SlotOverflowError(std::string(to_string(b)) + " slot " + std::to_string(slot) + " exceeds capacity " +
                              std::to_string(cap));
    }
  }

  OpStream& out_;
  const VtaConfig& config_;
};

template <typename T>
std::vector<T> sorted_unique(std::set<T> s) {
  return {s.begin(), s.end()};
}

class Lowering {
 public:
  Lowering(const PaddedProgram& pp, const DramImage& image, int layer, OpStream& out)
      : pp_(pp),
        prog_(pp.program),
        bs_(pp.config.bs),
        c_(pp.output_shape()),
        beta_(c_.block_cols()),
        emit_(out, pp.config) {
    c_region_ = image.region_of(layer, prog_.output().name);
    scratch_ = image.region_of(layer, kScratch);
    if (prog_.inp) {
      inp_region_ = image.region_of(layer, prog_.inp->matrix);
      if (!prog_.inp->descriptors.empty()) inp_gather_ = expand_descriptors(prog_.inp->descriptors);
    }
    if (prog_.gemm && prog_.gemm->scalar()) {
      wgt_region_ = image.region_of(layer, kDiagonal);
      scalar_ = true;
    } else if (prog_.wgt) {
      wgt_region_ = image.region_of(layer, prog_.wgt->matrix);
      if (!prog_.wgt->descriptors.empty()) wgt_gather_ = expand_descriptors(prog_.wgt->descriptors);
    }
    if (prog_.acc) {
      x_region_ = image.region_of(layer, prog_.acc->matrix);
      if (!prog_.acc->descriptors.empty()) {
        acc_gather_ = expand_descriptors(prog_.acc->descriptors);
        gathered_ = true;
      }
      if (prog_.acc->second) y_region_ = image.region_of(layer, *prog_.acc->second);
    }
    const int v = c_.vectors();
    designated_.assign(v, 0);
    spilled_.assign(v, 0);
    written_.assign(v, 0);
    if (prog_.store.vectors) {
      for (int r : expand_descriptors(*prog_.store.vectors)) designated_[r] = 1;
    } else {
      for (int r = 0; r < c_.rows * beta_; ++r) designated_[r] = 1;
    }
  }

  Lowered run(const OffloadPlan* gemm_plan, const AluPlan& alu_plan) {
    Lowered result;
    const auto pairs = program_alu_pairs(pp_);
    const bool has_alu = !pairs.empty();
    if (gemm_plan) {
      const long long addends = y_region_ >= 0 ? c_.vectors() : 0;
      const bool fuse = has_alu && gemm_plan->partitions.size() == 1 &&
                        static_cast<long long>(gemm_plan->partitions[0].distinct_acc().size()) * bs_ + addends <=
                            pp_.config.acc_size;
      result.gemm_partitions = static_cast<int>(gemm_plan->partitions.size());
      if (fuse) {
        fused_gemm_alu(gemm_plan->partitions[0], pairs);
        result.fused = true;
        result.alu_partitions = 0;
      } else {
        gemm_phase(*gemm_plan, has_alu);
        if (has_alu) alu_phase(alu_plan);
        result.alu_partitions = has_alu ? static_cast<int>(alu_plan.partitions.size()) : 0;
      }
    } else {
      alu_phase(alu_plan);
      result.alu_partitions = static_cast<int>(alu_plan.partitions.size());
    }
    writeback();
    return result;
  }

 private:
  int vector_of(int block, int u) const { return ((block / beta_) * bs_ + u) * beta_ + block % beta_; }

  std::pair<int, int> vector_source(int r) const {
    if (spilled_[r]) return {scratch_, r};
    if (x_region_ < 0) return {scratch_, r};
    if (!gathered_) return {x_region_, r};
    if (r < static_cast<int>(acc_gather_.size())) return {x_region_, acc_gather_[r]};
    return {scratch_, r};
  }

  void acc_block_items(int l, int slot, std::vector<LoadItem>& items) const {
    bool all_spilled = true;
    bool none_spilled = true;
    for (int u = 0; u < bs_; ++u) {
      (spilled_[vector_of(l, u)] ? none_spilled : all_spilled) = false;
    }
    if (all_spilled || (none_spilled && (x_region_ < 0 || !gathered_))) {
      items.push_back({all_spilled || x_region_ < 0 ? scratch_ : x_region_, Item::Block, l, slot});
      return;
    }
    for (int u = 0; u < bs_; ++u) {
      const auto [region, index] = vector_source(vector_of(l, u));
      items.push_back({region, Item::Vector, index, slot + u});
    }
  }

  int inp_block(int p) const { return inp_gather_.empty() ? p : inp_gather_[p]; }
  int wgt_block(int m) const { return wgt_gather_.empty() ? m : wgt_gather_[m]; }

  struct Resident {
    std::map<int, int> inp;
    std::map<int, int> wgt;
    std::map<int, int> acc;  // block -> first vector slot
  };

  Resident load_gemm_operands(const Partition& part) {
    Resident res;
    std::vector<LoadItem> items;
    for (int p : sorted_unique(part.distinct_inp())) {
      const int slot = static_cast<int>(res.inp.size());
      res.inp[p] = slot;
      items.push_back({inp_region_, Item::Block, inp_block(p), slot});
    }
    emit_.loads(Buffer::Inp, items);
    items.clear();
    if (scalar_) {
      // Every triple multiplies by the same b*I block.
      for (int m : part.distinct_wgt()) res.wgt[m] = 0;
      items.push_back({wgt_region_, Item::Block, 0, 0});
    } else {
      for (int m : sorted_unique(part.distinct_wgt())) {
        const int slot = static_cast<int>(res.wgt.size());
        res.wgt[m] = slot;
        items.push_back({wgt_region_, Item::Block, wgt_block(m), slot});
      }
    }
    emit_.loads(Buffer::Wgt, items);
    items.clear();
    for (int l : sorted_unique(part.distinct_acc())) {
      const int slot = static_cast<int>(res.acc.size()) * bs_;
      res.acc[l] = slot;
      acc_block_items(l, slot, items);
    }
    emit_.loads(Buffer::Acc, items);
    for (const auto& t : part.triples) emit_.gemm(res.acc.at(t.l), res.inp.at(t.p), res.wgt.at(t.m));
    return res;
  }

  // Designated vectors of a block, as one block item when all are designated.
  void store_block(int l, int slot, std::vector<StoreItem>& items) {
    int count = 0;
    for (int u = 0; u < bs_; ++u) count += designated_[vector_of(l, u)];
    if (count == bs_) {
      items.push_back({c_region_, Item::Block, slot, l});
    } else {
      for (int u = 0; u < bs_; ++u) {
        if (designated_[vector_of(l, u)]) items.push_back({c_region_, Item::Vector, slot + u, vector_of(l, u)});
      }
    }
    for (int u = 0; u < bs_; ++u) {
      if (designated_[vector_of(l, u)]) written_[vector_of(l, u)] = 1;
    }
  }

  void gemm_phase(const OffloadPlan& plan, bool has_alu) {
    std::map<int, std::size_t> last;
    for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
      for (const auto& t : plan.partitions[n].triples) last[t.l] = n;
    }
    for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
      const auto res = load_gemm_operands(plan.partitions[n]);
      std::vector<StoreItem> out;
      std::vector<StoreItem> spill;
      for (const auto& [l, slot] : res.acc) {
        if (last.at(l) == n && !has_alu) {
          store_block(l, slot, out);
        } else {
          spill.push_back({scratch_, Item::Block, slot, l});
          for (int u = 0; u < bs_; ++u) spilled_[vector_of(l, u)] = 1;
        }
      }
      emit_.stores(out);
      emit_.stores(spill);
    }
  }

  void fused_gemm_alu(const Partition& part, const std::vector<AluPair>& pairs) {
    const auto res = load_gemm_operands(part);
    auto slot_of = [&](int r) {
      const int row = r / beta_;
      const int block = (row / bs_) * beta_ + r % beta_;
      return res.acc.at(block) + row % bs_;
    };
    const int base = static_cast<int>(res.acc.size()) * bs_;
    if (y_region_ >= 0) {
      std::vector<LoadItem> items;
      for (int r = 0; r < c_.vectors(); ++r) items.push_back({y_region_, Item::Vector, r, base + r});
      emit_.loads(Buffer::Acc, items);
    }
    for (const auto& p : pairs) {
      emit_.alu(p, slot_of(p.dst), p.operand == AluOperand::Addend ? base + p.src : slot_of(p.src));
    }
    std::vector<StoreItem> out;
    for (const auto& [l, slot] : res.acc) store_block(l, slot, out);
    emit_.stores(out);
  }

  void alu_phase(const AluPlan& plan) {
    std::map<int, std::size_t> last;
    std::vector<std::set<int>> own(plan.partitions.size());
    std::vector<std::set<int>> addend(plan.partitions.size());
    for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
      for (const auto& p : plan.partitions[n].alu_pairs) {
        own[n].insert(p.dst);
        if (p.operand == AluOperand::Vector) own[n].insert(p.src);
        if (p.operand == AluOperand::Addend) addend[n].insert(p.src);
      }
      for (int r : own[n]) last[r] = n;
    }
    for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
      std::map<int, int> slot;
      std::map<int, int> addend_slot;
      std::vector<LoadItem> items;
      for (int r : own[n]) {
        const int s = static_cast<int>(slot.size());
        slot[r] = s;
        const auto [region, index] = vector_source(r);
        items.push_back({region, Item::Vector, index, s});
      }
      for (int r : addend[n]) {
        const int s = static_cast<int>(slot.size() + addend_slot.size());
        addend_slot[r] = s;
        items.push_back({y_region_, Item::Vector, r, s});
      }
      emit_.loads(Buffer::Acc, items);
      for (const auto& p : plan.partitions[n].alu_pairs) {
        const int src = p.operand == AluOperand::Addend   ? addend_slot.at(p.src)
                        : p.operand == AluOperand::Vector ? slot.at(p.src)
                                                          : 0;
        emit_.alu(p, slot.at(p.dst), src);
      }
      std::vector<StoreItem> out;
      std::vector<StoreItem> spill;
      for (const auto& [r, s] : slot) {
        if (last.at(r) > n) {
          spill.push_back({scratch_, Item::Vector, s, r});
          spilled_[r] = 1;
        } else if (designated_[r]) {
          out.push_back({c_region_, Item::Vector, s, r});
          written_[r] = 1;
        }
      }
      emit_.stores(out);
      emit_.stores(spill);
    }
  }

  // Copies designated vectors that no offload has stored yet.
  void writeback() {
    std::vector<int> pending;
    for (int r = 0; r < c_.vectors(); ++r) {
      if (designated_[r] && !written_[r]) pending.push_back(r);
    }
    const int cap = pp_.config.acc_size;
    for (std::size_t start = 0; start < pending.size(); start += cap) {
      const auto end = std::min(pending.size(), start + cap);
      std::vector<LoadItem> items;
      std::vector<StoreItem> out;
      for (auto n = start; n < end; ++n) {
        const int r = pending[n];
        const int s = static_cast<int>(n - start);
        const auto [region, index] = vector_source(r);
        items.push_back({region, Item::Vector, index, s});
        out.push_back({c_region_, Item::Vector, s, r});
        written_[r] = 1;
      }
      emit_.loads(Buffer::Acc, items);
      emit_.stores(out);
    }
  }

  const PaddedProgram& pp_;
  const IrProgram& prog_;
  int bs_;
  const MatrixShape& c_;
  int beta_;
  Emitter emit_;
  int c_region_ = -1;
  int scratch_ = -1;
  int inp_region_ = -1;
  int wgt_region_ = -1;
  int x_region_ = -1;
  int y_region_ = -1;
  bool gathered_ = false;
  bool scalar_ = false;
  std::vector<int> inp_gather_;
  std::vector<int> wgt_gather_;
  std::vector<int> acc_gather_;
  std::vector<char> designated_;
  std::vector<char> spilled_;
  std::vector<char> written_;
};

}  // namespace

Lowered lower(const PaddedProgram& program, const OffloadPlan* gemm_plan, const AluPlan& alu_plan,
              const DramImage& image, int layer) {
  if (program.program.gemm && !gemm_plan) throw PlanError("a GEMM program needs a GEMM plan");
  Lowered out;
  Lowering lowering(program, image, layer, out.stream);
  auto meta = lowering.run(program.program.gemm ? gemm_plan : nullptr, alu_plan);
  meta.stream = std::move(out.stream);
  return meta;
}

std::vector<Run> coalesce(const std::vector<int>& items, const std::vector<int>& slots, int pitch, int step) {
  std::vector<Run> runs;
  const std::size_t size = items.size();
  std::size_t n = 0;
  while (n < size) {
    const int r0 = items[n] / pitch;
    const int c0 = items[n] % pitch;
    std::size_t w = 1;
    while (n + w < size && items[n + w] == items[n + w - 1] + 1 && items[n + w] / pitch == r0 &&
           slots[n + w] == slots[n + w - 1] + step) {
      ++w;
    }
    std::size_t h = 1;
    for (;;) {
      const std::size_t base = n + h * w;
      if (base + w > size) break;
      bool ok = true;
      for (std::size_t e = 0; e < w && ok; ++e) {
        ok = items[base + e] == (r0 + static_cast<int>(h)) * pitch + c0 + static_cast<int>(e) &&
             slots[base + e] == slots[base + e - 1] + step;
      }
      if (!ok) break;
      ++h;
    }
    runs.push_back(Run{n, static_cast<int>(w), static_cast<int>(h)});
    n += w * h;
  }
  return runs;
}

StreamStats count_stats(const OpStream& stream, const DramImage& image) {
  StreamStats s;
  const VtaOp* prev = nullptr;
  for (const auto& op : stream) {
    if (const auto* ld = std::get_if<LoadOp>(&op)) {
      const auto& region = image.regions.at(ld->region);
      const int step = ld->buffer == Buffer::Acc && ld->item == Item::Block ? region.bs : 1;
      std::vector<int> slots(ld->sources.size());
      for (std::size_t n = 0; n < slots.size(); ++n) slots[n] = ld->dest_slot + static_cast<int>(n) * step;
      const auto runs = static_cast<long long>(coalesce(ld->sources, slots, region.pitch(), step).size());
      s.loads += runs;
      s.instructions += runs;
    } else if (const auto* st = std::get_if<StoreOp>(&op)) {
      const auto& region = image.regions.at(st->region);
      const int step = st->item == Item::Block ? region.bs : 1;
      const auto runs = static_cast<long long>(coalesce(st->dests, st->slots, region.pitch(), step).size());
      s.stores += runs;
      s.instructions += runs;
    } else if (std::holds_alternative<GemmOp>(op)) {
      ++s.uops;
      if (!prev || !std::holds_alternative<GemmOp>(*prev)) ++s.instructions;
    } else {
      const auto& alu = std::get<AluOp>(op);
      ++s.uops;
      const auto* before = prev ? std::get_if<AluOp>(prev) : nullptr;
      if (!before || before->op != alu.op || before->immediate != alu.immediate) ++s.instructions;
    }
    prev = &op;
  }
  return s;
}

}  // namespace vta
