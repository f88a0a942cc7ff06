#include "vta/partition.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <tuple>

#include "vta/error.hpp"

namespace vta {

std::set<int> Partition::distinct_inp() const {
  std::set<int> s;
  for (const auto& t : triples) s.insert(t.p);
  return s;
}

std::set<int> Partition::distinct_wgt() const {
  std::set<int> s;
  for (const auto& t : triples) s.insert(t.m);
  return s;
}

std::set<int> Partition::distinct_acc() const {
  std::set<int> s;
  for (const auto& t : triples) s.insert(t.l);
  return s;
}

int Partition::alu_acc_vectors() const {
  std::set<int> own;
  std::set<int> addend;
  for (const auto& a : alu_pairs) {
    own.insert(a.dst);
    if (a.operand == AluOperand::Vector) own.insert(a.src);
    if (a.operand == AluOperand::Addend) addend.insert(a.src);
  }
  return static_cast<int>(own.size() + addend.size());
}

bool needs_partitioning(BlockShape s, const VtaConfig& c) {
  return static_cast<long long>(s.alpha) * s.lambda > c.inp_size ||
         static_cast<long long>(s.lambda) * s.beta > c.wgt_size ||
         static_cast<long long>(s.alpha) * s.beta * c.bs > c.acc_size;
}

namespace {

struct Range {
  int begin;
  int end;
};

Partition make_partition(BlockShape s, Range i, Range j, Range k) {
  Partition p;
  for (int a = i.begin; a < i.end; ++a) {
    for (int b = j.begin; b < j.end; ++b) {
      for (int c = k.begin; c < k.end; ++c) {
        p.triples.push_back({a * s.beta + b, a * s.lambda + c, c * s.beta + b});
      }
    }
  }
  return p;
}

// Invokes fn(Range) over [0, total) in chunks of `step`.
template <typename Fn>
void chunks(int total, int step, Fn&& fn) {
  for (int start = 0; start < total; start += step) fn(Range{start, std::min(total, start + step)});
}

int isqrt(int v) {
  int r = static_cast<int>(std::sqrt(static_cast<double>(v)));
  while (r * r > v) --r;
  while ((r + 1) * (r + 1) <= v) ++r;
  return r;
}

}  // namespace

OffloadPlan plan_gemm(BlockShape s, int strategy, const VtaConfig& c) {
  c.validate();
  if (s.alpha < 1 || s.lambda < 1 || s.beta < 1) throw PlanError("block counts must be >= 1");
  OffloadPlan plan{{}, strategy, s};
  const int inp = c.inp_size;
  const int wgt = c.wgt_size;
  const int acc = c.acc_blocks();
  if (inp < 1 || wgt < 1 || acc < 1) throw PlanError("a single GEMM triple does not fit the buffers");
  auto emit = [&](Range i, Range j, Range k) { plan.partitions.push_back(make_partition(s, i, j, k)); };

  switch (strategy) {
    case 1: {
      const int kc = std::min({s.lambda, inp, wgt});
      for (int i = 0; i < s.alpha; ++i) {
        for (int j = 0; j < s.beta; ++j) {
          chunks(s.lambda, kc, [&](Range k) { emit({i, i + 1}, {j, j + 1}, k); });
        }
      }
      break;
    }
    case 2: {
      const int t = std::max(1, isqrt(std::min({inp, wgt, acc})));
      const int ti = std::min(t, s.alpha);
      const int tj = std::min(t, s.beta);
      const int tk = std::min(t, s.lambda);
      chunks(s.alpha, ti, [&](Range i) {
        chunks(s.beta, tj, [&](Range j) { chunks(s.lambda, tk, [&](Range k) { emit(i, j, k); }); });
      });
      break;
    }
    case 3: {
      const int ic = std::min({s.alpha, acc, inp});
      const int kc = std::min({s.lambda, inp / ic, wgt});
      for (int j = 0; j < s.beta; ++j) {
        chunks(s.alpha, ic, [&](Range i) { chunks(s.lambda, kc, [&](Range k) { emit(i, {j, j + 1}, k); }); });
      }
      break;
    }
    case 4: {
      const int jc = std::min({s.beta, acc, wgt});
      const int kc = std::min({s.lambda, wgt / jc, inp});
      for (int i = 0; i < s.alpha; ++i) {
        chunks(s.beta, jc, [&](Range j) { chunks(s.lambda, kc, [&](Range k) { emit({i, i + 1}, j, k); }); });
      }
      break;
    }
    default:
      throw PlanError("unknown strategy " + std::to_string(strategy) + " (expected 1..4)");
  }
  return plan;
}

AluPlan plan_alu(const std::vector<AluPair>& pairs, const VtaConfig& c) {
  c.validate();
  AluPlan plan;
  if (pairs.empty()) return plan;
  if (c.acc_size < 2 && std::any_of(pairs.begin(), pairs.end(), [](const AluPair& p) {
        return p.operand != AluOperand::Immediate && p.src != p.dst;
      })) {
    throw PlanError("ACC cannot hold the two vectors of a vector-vector ALU op");
  }

  std::set<int> sources;
  std::set<int> vector_dsts;
  for (const auto& p : pairs) {
    if (p.operand == AluOperand::Vector) {
      sources.insert(p.src);
      vector_dsts.insert(p.dst);
    } else if (p.operand == AluOperand::Addend) {
      vector_dsts.insert(p.dst);
    }
  }
  plan.row_wise = vector_dsts.empty() &&
                  std::none_of(pairs.begin(), pairs.end(), [&](const AluPair& p) { return sources.contains(p.dst); });

  if (plan.row_wise) {
    std::map<int, std::vector<AluPair>> by_vector;
    for (const auto& p : pairs) by_vector[p.dst].push_back(p);
    Partition current;
    int resident = 0;
    for (auto& [v, ops] : by_vector) {
      if (resident == c.acc_size) {
        plan.partitions.push_back(std::move(current));
        current = {};
        resident = 0;
      }
      current.alu_pairs.insert(current.alu_pairs.end(), ops.begin(), ops.end());
      ++resident;
    }
    plan.partitions.push_back(std::move(current));
    return plan;
  }

  Partition current;
  std::set<int> own;
  std::set<int> addend;
  for (const auto& p : pairs) {
    auto next_own = own;
    auto next_addend = addend;
    next_own.insert(p.dst);
    if (p.operand == AluOperand::Vector) next_own.insert(p.src);
    if (p.operand == AluOperand::Addend) next_addend.insert(p.src);
    if (static_cast<int>(next_own.size() + next_addend.size()) > c.acc_size) {
      plan.partitions.push_back(std::move(current));
      current = {};
      own.clear();
      addend.clear();
      own.insert(p.dst);
      if (p.operand == AluOperand::Vector) own.insert(p.src);
      if (p.operand == AluOperand::Addend) addend.insert(p.src);
    } else {
      own = std::move(next_own);
      addend = std::move(next_addend);
    }
    current.alu_pairs.push_back(p);
  }
  plan.partitions.push_back(std::move(current));
  return plan;
}

std::string to_string(PlanViolation::Kind kind) {
  switch (kind) {
    case PlanViolation::Kind::Cover: return "cover";
    case PlanViolation::Kind::Disjoint: return "disjoint";
    case PlanViolation::Kind::InpCapacity: return "inp-capacity";
    case PlanViolation::Kind::WgtCapacity: return "wgt-capacity";
    case PlanViolation::Kind::AccCapacity: return "acc-capacity";
  }
  return "?";
}

std::optional<PlanViolation> validate_plan(const OffloadPlan& plan, BlockShape s, const VtaConfig& c) {
  using K = PlanViolation::Kind;
  std::vector<char> seen(static_cast<std::size_t>(s.triples()), 0);
  for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
    const auto& part = plan.partitions[n];
    const int idx = static_cast<int>(n);
    for (const auto& t : part.triples) {
      const int i = t.l / s.beta;
      const int j = t.l % s.beta;
      const int k = t.p % s.lambda;
      if (t.l < 0 || t.p < 0 || i >= s.alpha || t.p / s.lambda != i || t.m != k * s.beta + j) {
        return PlanViolation{K::Cover, idx,
                             "triple (" + std::to_string(t.l) + "," + std::to_string(t.p) + "," +
                                 std::to_string(t.m) + ") is not part of the block GEMM"};
      }
      auto& flag = seen[(static_cast<std::size_t>(i) * s.beta + j) * s.lambda + k];
      if (flag) {
        return PlanViolation{K::Disjoint, idx,
                             "triple (" + std::to_string(t.l) + "," + std::to_string(t.p) + "," +
                                 std::to_string(t.m) + ") appears more than once"};
      }
      flag = 1;
    }
    const auto inp = part.distinct_inp().size();
    const auto wgt = part.distinct_wgt().size();
    const auto acc = part.distinct_acc().size();
    if (static_cast<long long>(inp) > c.inp_size) {
      return PlanViolation{K::InpCapacity, idx, std::to_string(inp) + " INP blocks > " + std::to_string(c.inp_size)};
    }
    if (static_cast<long long>(wgt) > c.wgt_size) {
      return PlanViolation{K::WgtCapacity, idx, std::to_string(wgt) + " WGT blocks > " + std::to_string(c.wgt_size)};
    }
    if (static_cast<long long>(acc) * c.bs > c.acc_size) {
      return PlanViolation{K::AccCapacity, idx,
                           std::to_string(acc) + " ACC blocks need " + std::to_string(acc * c.bs) + " vectors > " +
                               std::to_string(c.acc_size)};
    }
  }
  const auto missing = std::find(seen.begin(), seen.end(), 0);
  if (missing != seen.end()) {
    const auto flat = static_cast<int>(missing - seen.begin());
    const int k = flat % s.lambda;
    const int j = flat / s.lambda % s.beta;
    const int i = flat / s.lambda / s.beta;
    return PlanViolation{K::Cover, -1,
                         "triple (" + std::to_string(i * s.beta + j) + "," + std::to_string(i * s.lambda + k) + "," +
                             std::to_string(k * s.beta + j) + ") is never executed"};
  }
  return std::nullopt;
}

namespace {

// For each op: the number of earlier writes to each vector it reads, and
// to the vector it writes. Equal signatures mean equal results.
std::vector<std::pair<long long, long long>> version_signature(const std::vector<AluPair>& order,
                                                               const std::vector<int>& original_index) {
  std::map<int, long long> writes;
  std::vector<std::pair<long long, long long>> sig(order.size());
  for (std::size_t n = 0; n < order.size(); ++n) {
    const auto& p = order[n];
    const long long src_version = p.operand == AluOperand::Vector ? writes[p.src] : 0;
    sig[static_cast<std::size_t>(original_index[n])] = {writes[p.dst], src_version};
    ++writes[p.dst];
  }
  return sig;
}

}  // namespace

std::optional<PlanViolation> validate_alu_plan(const AluPlan& plan, const std::vector<AluPair>& pairs,
                                               const VtaConfig& c) {
  using K = PlanViolation::Kind;
  using Key = std::tuple<int, int, int, int, std::int32_t>;
  auto key = [](const AluPair& p) {
    return Key{static_cast<int>(p.op), p.dst, static_cast<int>(p.operand), p.src, p.imm};
  };
  std::map<Key, std::deque<int>> remaining;
  for (std::size_t i = 0; i < pairs.size(); ++i) remaining[key(pairs[i])].push_back(static_cast<int>(i));

  std::vector<AluPair> flat;
  std::vector<int> flat_index;
  for (std::size_t n = 0; n < plan.partitions.size(); ++n) {
    const auto& part = plan.partitions[n];
    if (part.alu_acc_vectors() > c.acc_size) {
      return PlanViolation{K::AccCapacity, static_cast<int>(n),
                           std::to_string(part.alu_acc_vectors()) + " ACC vectors > " + std::to_string(c.acc_size)};
    }
    for (const auto& p : part.alu_pairs) {
      auto it = remaining.find(key(p));
      if (it == remaining.end() || it->second.empty()) {
        return PlanViolation{K::Disjoint, static_cast<int>(n),
                             "ALU op on vector " + std::to_string(p.dst) + " is scheduled more than once"};
      }
      flat.push_back(p);
      flat_index.push_back(it->second.front());
      it->second.pop_front();
    }
  }
  if (flat.size() != pairs.size()) {
    return PlanViolation{K::Cover, -1, std::to_string(pairs.size() - flat.size()) + " ALU ops are never executed"};
  }
  std::vector<int> identity(pairs.size());
  for (std::size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<int>(i);
  if (version_signature(flat, flat_index) != version_signature(pairs, identity)) {
    return PlanViolation{K::Cover, -1, "ALU ops are reordered across a dependency"};
  }
  return std::nullopt;
}

nlohmann::json plan_to_json(const OffloadPlan& plan) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : plan.partitions) {
    nlohmann::json triples = nlohmann::json::array();
    for (const auto& t : p.triples) triples.push_back({t.l, t.p, t.m});
    parts.push_back(std::move(triples));
  }
  return {{"strategy", plan.strategy},
          {"shape", {plan.shape.alpha, plan.shape.lambda, plan.shape.beta}},
          {"partitions", std::move(parts)}};
}

nlohmann::json alu_plan_to_json(const AluPlan& plan) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : plan.partitions) {
    nlohmann::json ops = nlohmann::json::array();
    for (const auto& a : p.alu_pairs) {
      nlohmann::json op = {{"op", std::string(to_string(a.op))}, {"dst", a.dst}};
      switch (a.operand) {
        case AluOperand::Vector: op["src"] = a.src; break;
        case AluOperand::Addend: op["addend"] = a.src; break;
        case AluOperand::Immediate: op["imm"] = a.imm; break;
      }
      ops.push_back(std::move(op));
    }
    parts.push_back(std::move(ops));
  }
  return {{"row_wise", plan.row_wise}, {"partitions", std::move(parts)}};
}

}  // namespace vta
