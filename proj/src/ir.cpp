#include "vta/ir.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>
#include <regex>
#include <set>
#include <span>
#include <sstream>

#include "json.hpp"
#include "vta/error.hpp"

namespace vta {

std::string_view to_string(AluOpcode op) {
  switch (op) {
    case AluOpcode::Max: return "MAX";
    case AluOpcode::Min: return "MIN";
    case AluOpcode::Add: return "ADD";
    case AluOpcode::Mul: return "MUL";
    case AluOpcode::Shr: return "SHR";
  }
  return "?";
}

namespace {

using Json = nlohmann::ordered_json;

constexpr std::array kTopLevelOrder = {"NAME", "MATRICES", "LOAD", "GEMM", "ALU", "STORE", "STRATEGY"};
constexpr std::array kLoadOrder = {"INP", "WGT", "ACC"};

bool is_path(std::string_view s) {
  static const std::regex re(R"(^(/?[a-zA-Z0-9_.\-]+/)*[a-zA-Z_][a-zA-Z0-9_]*\.bin$)");
  return std::regex_match(s.begin(), s.end(), re);
}

std::string child(const std::string& where, const std::string& key) { return where + "." + key; }
std::string child(const std::string& where, std::size_t index) {
  return where + "[" + std::to_string(index) + "]";
}

const Json& expect_array(const Json& j, const std::string& where, std::size_t min_len,
                         std::size_t max_len = std::numeric_limits<std::size_t>::max()) {
  if (!j.is_array()) throw SyntaxError(where, "expected an array");
  if (j.size() < min_len || j.size() > max_len) {
    std::string bounds = max_len == min_len ? std::to_string(min_len)
                         : max_len == std::numeric_limits<std::size_t>::max()
                             ? "at least " + std::to_string(min_len)
                             : std::to_string(min_len) + ".." + std::to_string(max_len);
    throw SyntaxError(where, "expected " + bounds + " elements, found " + std::to_string(j.size()));
  }
  return j;
}

const Json& expect_object(const Json& j, const std::string& where) {
  if (!j.is_object()) throw SyntaxError(where, "expected an object");
  return j;
}

std::int64_t parse_integer(const Json& j, const std::string& where) {
  if (!j.is_number_integer()) throw SyntaxError(where, "expected an integer");
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
      throw SemanticError(where + ": integer out of range");
    }
    return static_cast<std::int64_t>(u);
  }
  return j.get<std::int64_t>();
}

std::int32_t parse_int32(const Json& j, const std::string& where) {
  const auto v = parse_integer(j, where);
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max()) {
    throw SemanticError(where + ": value does not fit in int32");
  }
  return static_cast<std::int32_t>(v);
}

int parse_index(const Json& j, const std::string& where) {
  const auto v = parse_integer(j, where);
  if (v < 0) throw SemanticError(where + ": index must be non-negative");
  if (v > std::numeric_limits<int>::max() / 4) throw SemanticError(where + ": index too large");
  return static_cast<int>(v);
}

int parse_count(const Json& j, const std::string& where) {
  const int v = parse_index(j, where);
  if (v < 1) throw SemanticError(where + ": count must be >= 1");
  return v;
}

std::string parse_id(const Json& j, const std::string& where) {
  if (!j.is_string()) throw SyntaxError(where, "expected a string identifier");
  auto s = j.get<std::string>();
  if (!is_identifier(s)) throw SyntaxError(where, "'" + s + "' is not an identifier");
  return s;
}

IndexStride parse_int_pair(const Json& j, const std::string& where) {
  expect_array(j, where, 2, 2);
  return {parse_index(j[0], child(where, 0)), parse_index(j[1], child(where, 1))};
}

LoadDescriptor parse_data(const Json& j, const std::string& where) {
  expect_array(j, where, 2, 2);
  const auto pair = parse_int_pair(j[0], child(where, 0));
  return {pair.start, pair.stride, parse_count(j[1], child(where, 1))};
}

std::vector<LoadDescriptor> parse_data_list(const Json& j, std::size_t first, const std::string& where) {
  std::vector<LoadDescriptor> out;
  for (std::size_t i = first; i < j.size(); ++i) out.push_back(parse_data(j[i], child(where, i)));
  return out;
}

void check_order(const Json& obj, std::span<const char* const> order, const std::string& where,
                 std::vector<Diagnostic>* warnings) {
  if (!warnings) return;
  int last = -1;
  for (const auto& [key, _] : obj.items()) {
    auto it = std::find_if(order.begin(), order.end(), [&](const char* k) { return key == k; });
    if (it == order.end()) continue;
    const int rank = static_cast<int>(it - order.begin());
    if (rank < last) {
      warnings->push_back({child(where, key), "key '" + key + "' is out of canonical order"});
    }
    last = std::max(last, rank);
  }
}

struct Parser {
  std::vector<Diagnostic>* warnings;
  IrProgram program;

  void parse_matrices(const Json& j, const std::string& where) {
    expect_object(j, where);
    std::vector<MatrixDecl> inputs;
    std::vector<MatrixDecl> outputs;
    bool output_seen_last = true;
    for (const auto& [name, value] : j.items()) {
      const auto at = child(where, name);
      if (!is_identifier(name)) throw SyntaxError(at, "'" + name + "' is not an identifier");
      expect_array(value, at, 3, 3);
      MatrixDecl decl;
      decl.name = name;
      const auto rows = parse_integer(value[0], child(at, 0));
      const auto cols = parse_integer(value[1], child(at, 1));
      if (rows < 0 || cols < 0) throw SemanticError(at + ": matrix dimensions must be non-negative");
      if (rows > (1 << 24) || cols > (1 << 24)) throw SemanticError(at + ": matrix dimensions too large");
      decl.rows = static_cast<int>(rows);
      decl.cols = static_cast<int>(cols);
      if (!value[2].is_string()) throw SyntaxError(child(at, 2), "expected \"input\", \"output\" or a .bin path");
      const auto src = value[2].get<std::string>();
      if (src == "input") {
        decl.source = SourceKind::Input;
      } else if (src == "output") {
        decl.source = SourceKind::Output;
      } else if (is_path(src)) {
        decl.source = SourceKind::File;
        decl.path = src;
      } else {
        throw SyntaxError(child(at, 2), "'" + src + "' is neither a keyword nor a .bin path");
      }
      if (decl.source == SourceKind::Output) {
        outputs.push_back(std::move(decl));
      } else {
        if (!outputs.empty()) output_seen_last = false;
        inputs.push_back(std::move(decl));
      }
    }
    if (outputs.size() != 1) {
      throw SyntaxError(where, "exactly one \"output\" matrix is required, found " + std::to_string(outputs.size()));
    }
    if (inputs.empty() || inputs.size() > 3) {
      throw SyntaxError(where, "between one and three non-output matrices are required, found " +
                                   std::to_string(inputs.size()));
    }
    if (!output_seen_last && warnings) {
      warnings->push_back({where, "the output matrix should be declared last"});
    }
    program.matrices = std::move(inputs);
    program.matrices.push_back(std::move(outputs.front()));
  }

  BufferLoad parse_buffer_load(const Json& j, const std::string& where) {
    expect_array(j, where, 1);
    BufferLoad load;
    load.matrix = parse_id(j[0], child(where, 0));
    load.descriptors = parse_data_list(j, 1, where);
    return load;
  }

  AccLoad parse_acc_load(const Json& j, const std::string& where) {
    expect_array(j, where, 1);
    AccLoad load;
    load.matrix = parse_id(j[0], child(where, 0));
    if (j.size() == 2 && j[1].is_string()) {
      load.second = parse_id(j[1], child(where, 1));
    } else {
      load.descriptors = parse_data_list(j, 1, where);
    }
    return load;
  }

  void parse_load(const Json& j, const std::string& where) {
    expect_object(j, where);
    check_order(j, kLoadOrder, where, warnings);
    for (const auto& [key, value] : j.items()) {
      const auto at = child(where, key);
      if (key == "INP") {
        program.inp = parse_buffer_load(value, at);
      } else if (key == "WGT") {
        program.wgt = parse_buffer_load(value, at);
      } else if (key == "ACC") {
        program.acc = parse_acc_load(value, at);
      } else {
        throw SyntaxError(at, "unknown buffer '" + key + "'");
      }
    }
    // Grammar: (INP, WGT, ACC?) | ACC. INP without WGT is admitted for a
    // scalar GEMM and checked later.
    if (!program.inp && !program.acc) throw SyntaxError(where, "LOAD needs INP or ACC");
    if (program.wgt && !program.inp) throw SyntaxError(where, "WGT requires INP");
  }

  void parse_gemm(const Json& j, const std::string& where) {
    expect_array(j, where, 3, 3);
    GemmClause g;
    g.dst = parse_id(j[0], child(where, 0));
    g.src = parse_id(j[1], child(where, 1));
    if (j[2].is_string()) {
      g.rhs = parse_id(j[2], child(where, 2));
    } else {
      g.rhs = parse_int32(j[2], child(where, 2));
    }
    program.gemm = std::move(g);
  }

  AluDecl parse_alu_op(const std::string& name, const Json& args, const std::string& where) {
    static const std::map<std::string, std::pair<AluOpcode, bool>> kOps = {
        {"MAX", {AluOpcode::Max, false}},     {"MIN", {AluOpcode::Min, false}},
        {"ADD", {AluOpcode::Add, false}},     {"MUL", {AluOpcode::Mul, false}},
        {"SHR", {AluOpcode::Shr, false}},     {"MAX_IMM", {AluOpcode::Max, true}},
        {"MIN_IMM", {AluOpcode::Min, true}},  {"ADD_IMM", {AluOpcode::Add, true}},
        {"MUL_IMM", {AluOpcode::Mul, true}},  {"SHR_IMM", {AluOpcode::Shr, true}},
    };
    auto it = kOps.find(name);
    if (it == kOps.end()) throw SyntaxError(where, "unknown ALU operation '" + name + "'");
    AluDecl d;
    d.op = it->second.first;
    d.immediate = it->second.second;
    const auto at = child(where, 1);
    expect_array(args, at, 3, 3);
    d.dst = parse_int_pair(args[0], child(at, 0));
    if (d.immediate) {
      d.scalar = parse_int32(args[1], child(at, 1));
    } else {
      d.src = parse_int_pair(args[1], child(at, 1));
    }
    d.iterations = parse_count(args[2], child(at, 2));
    return d;
  }

  void parse_alu(const Json& j, const std::string& where) {
    expect_object(j, where);
    if (j.size() != 1) throw SyntaxError(where, "ALU must name exactly one target matrix");
    const auto& [target, list] = *j.items().begin();
    const auto at = child(where, target);
    if (!is_identifier(target)) throw SyntaxError(at, "'" + target + "' is not an identifier");
    expect_array(list, at, 1);
    AluClause clause;
    clause.target = target;
    std::vector<AluDecl> decls;
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto op_at = child(at, i);
      expect_array(list[i], op_at, 2, 2);
      if (!list[i][0].is_string()) throw SyntaxError(child(op_at, 0), "expected an ALU operation name");
      const auto name = list[i][0].get<std::string>();
      if (name == "ADD_ACC") {
        if (list.size() != 1) throw SyntaxError(op_at, "ADD_ACC cannot be combined with other ALU operations");
        const auto args_at = child(op_at, 1);
        expect_array(list[i][1], args_at, 2, 2);
        clause.body = AddAcc{parse_id(list[i][1][0], child(args_at, 0)), parse_id(list[i][1][1], child(args_at, 1))};
        program.alu = std::move(clause);
        return;
      }
      decls.push_back(parse_alu_op(name, list[i][1], op_at));
    }
    clause.body = std::move(decls);
    program.alu = std::move(clause);
  }

  void parse_store(const Json& j, const std::string& where) {
    expect_object(j, where);
    if (j.size() != 1) throw SyntaxError(where, "STORE must name exactly one matrix");
    const auto& [target, list] = *j.items().begin();
    const auto at = child(where, target);
    if (!is_identifier(target)) throw SyntaxError(at, "'" + target + "' is not an identifier");
    expect_array(list, at, 1);
    program.store.matrix = target;
    if (list.size() == 1 && list[0].is_string()) {
      const auto whole = parse_id(list[0], child(at, 0));
      if (whole != target) throw SemanticError(child(at, 0) + ": whole-matrix STORE must repeat '" + target + "'");
      program.store.vectors.reset();
    } else {
      program.store.vectors = parse_data_list(list, 0, at);
    }
  }

  void parse_document(const Json& doc) {
    const std::string root = "$";
    expect_object(doc, root);
    check_order(doc, kTopLevelOrder, root, warnings);
    for (const auto& [key, _] : doc.items()) {
      if (std::find_if(kTopLevelOrder.begin(), kTopLevelOrder.end(), [&](const char* k) { return key == k; }) ==
          kTopLevelOrder.end()) {
        throw SyntaxError(child(root, key), "unknown top-level field");
      }
    }
    for (const char* required : {"NAME", "MATRICES", "LOAD", "STORE"}) {
      if (!doc.contains(required)) throw SyntaxError(root, std::string("missing field \"") + required + "\"");
    }
    if (!doc.contains("GEMM") && !doc.contains("ALU")) throw SyntaxError(root, "GEMM or ALU is required");

    program.name = parse_id(doc["NAME"], child(root, "NAME"));
    parse_matrices(doc["MATRICES"], child(root, "MATRICES"));
    parse_load(doc["LOAD"], child(root, "LOAD"));
    if (doc.contains("GEMM")) parse_gemm(doc["GEMM"], child(root, "GEMM"));
    if (doc.contains("ALU")) parse_alu(doc["ALU"], child(root, "ALU"));
    parse_store(doc["STORE"], child(root, "STORE"));
    if (doc.contains("STRATEGY")) {
      const auto at = child(root, "STRATEGY");
      const auto s = parse_integer(doc["STRATEGY"], at);
      if (s < 1 || s > 4) throw SemanticError(at + ": strategy must be in 1..4, got " + std::to_string(s));
      program.strategy = static_cast<int>(s);
    }
  }
};

const MatrixDecl& require(const IrProgram& p, const std::string& name, const std::string& where) {
  const auto* m = p.find(name);
  if (!m) throw SemanticError(where + ": unknown matrix '" + name + "'");
  return *m;
}

void require_loadable(const MatrixDecl& m, const std::string& where) {
  if (m.source == SourceKind::Output) throw SemanticError(where + ": the output matrix cannot be loaded");
}

void check_semantics(const IrProgram& p) {
  const auto& out = p.output();
  std::set<std::string> used;

  if (p.inp) {
    require_loadable(require(p, p.inp->matrix, "$.LOAD.INP"), "$.LOAD.INP");
    used.insert(p.inp->matrix);
  }
  if (p.wgt) {
    require_loadable(require(p, p.wgt->matrix, "$.LOAD.WGT"), "$.LOAD.WGT");
    used.insert(p.wgt->matrix);
  }
  if (p.acc) {
    const auto& x = require(p, p.acc->matrix, "$.LOAD.ACC");
    require_loadable(x, "$.LOAD.ACC");
    used.insert(x.name);
    if (p.acc->descriptors.empty() && (x.rows != out.rows || x.cols != out.cols)) {
      throw SemanticError("$.LOAD.ACC: '" + x.name + "' must have the output shape " + std::to_string(out.rows) +
                          "x" + std::to_string(out.cols));
    }
    if (p.acc->second) {
      const auto& y = require(p, *p.acc->second, "$.LOAD.ACC[1]");
      require_loadable(y, "$.LOAD.ACC[1]");
      if (y.name == x.name) throw SemanticError("$.LOAD.ACC: the same matrix is loaded twice");
      if (y.rows != out.rows || y.cols != out.cols) {
        throw SemanticError("$.LOAD.ACC[1]: '" + y.name + "' must have the output shape");
      }
      used.insert(y.name);
    }
  }

  if (p.gemm) {
    const auto& g = *p.gemm;
    if (g.dst != out.name) throw SemanticError("$.GEMM[0]: GEMM destination must be the output matrix '" + out.name + "'");
    const auto& a = require(p, g.src, "$.GEMM[1]");
    if (!p.inp || p.inp->matrix != g.src) {
      throw SemanticError("$.GEMM[1]: '" + g.src + "' must be the matrix loaded into INP");
    }
    if (a.rows != out.rows) throw SemanticError("$.GEMM: shape mismatch, '" + a.name + "' rows != output rows");
    if (g.scalar()) {
      if (p.wgt) throw SemanticError("$.LOAD.WGT: a scalar GEMM takes no WGT matrix");
    } else {
      const auto& rhs_name = std::get<std::string>(g.rhs);
      const auto& b = require(p, rhs_name, "$.GEMM[2]");
      if (!p.wgt || p.wgt->matrix != rhs_name) {
        throw SemanticError("$.GEMM[2]: '" + rhs_name + "' must be the matrix loaded into WGT");
      }
      if (b.rows != a.cols || b.cols != out.cols) {
        throw SemanticError("$.GEMM: shape mismatch, " + a.name + " is " + std::to_string(a.rows) + "x" +
                            std::to_string(a.cols) + ", " + b.name + " is " + std::to_string(b.rows) + "x" +
                            std::to_string(b.cols) + ", output is " + std::to_string(out.rows) + "x" +
                            std::to_string(out.cols));
      }
    }
  } else {
    if (p.inp || p.wgt) throw SemanticError("$.LOAD: INP/WGT loads require a GEMM");
  }

  if (p.alu) {
    if (p.alu->target != out.name) {
      throw SemanticError("$.ALU: the ALU target must be the output matrix '" + out.name + "', not '" +
                          p.alu->target + "'");
    }
    if (const auto* add = std::get_if<AddAcc>(&p.alu->body)) {
      if (!p.acc || !p.acc->second) {
        throw SemanticError("$.ALU: ADD_ACC needs two matrices loaded into ACC");
      }
      if (add->lhs != out.name && add->lhs != p.acc->matrix) {
        throw SemanticError("$.ALU: ADD_ACC destination must be '" + out.name + "' or '" + p.acc->matrix + "'");
      }
      if (add->rhs != *p.acc->second) {
        throw SemanticError("$.ALU: ADD_ACC source must be the second ACC matrix '" + *p.acc->second + "'");
      }
    }
  }
  if (p.acc && p.acc->second) {
    if (!p.alu || !std::holds_alternative<AddAcc>(p.alu->body)) {
      throw SemanticError("$.LOAD.ACC: a second ACC matrix is only meaningful with ADD_ACC");
    }
  }

  if (p.store.matrix != out.name) {
    throw SemanticError("$.STORE: the stored matrix must be the output matrix '" + out.name + "'");
  }

  for (const auto& m : p.matrices) {
    if (m.source != SourceKind::Output && !used.contains(m.name)) {
      throw SemanticError("$.MATRICES." + m.name + ": matrix is declared but never loaded");
    }
  }
}

void duplicate_key_guard(std::vector<std::set<std::string>>& stack, nlohmann::json::parse_event_t event,
                         const Json& parsed) {
  using E = nlohmann::json::parse_event_t;
  if (event == E::object_start) {
    stack.emplace_back();
  } else if (event == E::object_end) {
    if (!stack.empty()) stack.pop_back();
  } else if (event == E::key && !stack.empty()) {
    const auto key = parsed.get<std::string>();
    if (!stack.back().insert(key).second) throw SyntaxError("$", "duplicate key \"" + key + "\"");
  }
}

void render_descriptor(std::ostringstream& os, const LoadDescriptor& d) {
  os << "[[" << d.start << ", " << d.stride << "], " << d.count << "]";
}

std::string quoted(const std::string& s) { return Json(s).dump(); }

}  // namespace

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  auto digit = [](char c) { return c >= '0' && c <= '9'; };
  if (!alpha(s.front())) return false;
  return std::all_of(s.begin() + 1, s.end(), [&](char c) { return alpha(c) || digit(c); });
}

bool is_hex_literal(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
  });
}

const MatrixDecl* IrProgram::find(std::string_view n) const {
  for (const auto& m : matrices) {
    if (m.name == n) return &m;
  }
  return nullptr;
}

IrProgram parse_ir(std::string_view text, std::vector<Diagnostic>* warnings) {
  Json doc;
  std::vector<std::set<std::string>> keys;
  try {
    doc = Json::parse(text.begin(), text.end(),
                      [&](int, nlohmann::json::parse_event_t event, Json& parsed) {
                        duplicate_key_guard(keys, event, parsed);
                        return true;
                      });
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError("byte " + std::to_string(e.byte), e.what());
  }
  Parser parser{warnings, {}};
  parser.parse_document(doc);
  check_semantics(parser.program);
  return std::move(parser.program);
}

IrProgram load_ir(const std::string& path, std::vector<Diagnostic>* warnings) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open IR file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_ir(ss.str(), warnings);
}

std::string render_ir(const IrProgram& p) {
  std::ostringstream os;
  os << "{\n  \"NAME\": " << quoted(p.name) << ",\n  \"MATRICES\": {\n";
  for (std::size_t i = 0; i < p.matrices.size(); ++i) {
    const auto& m = p.matrices[i];
    os << "    " << quoted(m.name) << ": [" << m.rows << ", " << m.cols << ", ";
    switch (m.source) {
      case SourceKind::Input: os << "\"input\""; break;
      case SourceKind::Output: os << "\"output\""; break;
      case SourceKind::File: os << quoted(m.path); break;
    }
    os << "]" << (i + 1 < p.matrices.size() ? "," : "") << "\n";
  }
  os << "  },\n  \"LOAD\": {\n";
  std::vector<std::string> loads;
  auto buffer = [&](const char* key, const BufferLoad& b) {
    std::ostringstream l;
    l << "    \"" << key << "\": [" << quoted(b.matrix);
    for (const auto& d : b.descriptors) {
      l << ", ";
      render_descriptor(l, d);
    }
    l << "]";
    loads.push_back(l.str());
  };
  if (p.inp) buffer("INP", *p.inp);
  if (p.wgt) buffer("WGT", *p.wgt);
  if (p.acc) {
    std::ostringstream l;
    l << "    \"ACC\": [" << quoted(p.acc->matrix);
    if (p.acc->second) l << ", " << quoted(*p.acc->second);
    for (const auto& d : p.acc->descriptors) {
      l << ", ";
      render_descriptor(l, d);
    }
    l << "]";
    loads.push_back(l.str());
  }
  for (std::size_t i = 0; i < loads.size(); ++i) os << loads[i] << (i + 1 < loads.size() ? ",\n" : "\n");
  os << "  },\n";
  if (p.gemm) {
    os << "  \"GEMM\": [" << quoted(p.gemm->dst) << ", " << quoted(p.gemm->src) << ", ";
    if (p.gemm->scalar()) {
      os << std::get<std::int32_t>(p.gemm->rhs);
    } else {
      os << quoted(std::get<std::string>(p.gemm->rhs));
    }
    os << "],\n";
  }
  if (p.alu) {
    os << "  \"ALU\": {\n    " << quoted(p.alu->target) << ": [\n";
    if (const auto* add = std::get_if<AddAcc>(&p.alu->body)) {
      os << "      [\"ADD_ACC\", [" << quoted(add->lhs) << ", " << quoted(add->rhs) << "]]\n";
    } else {
      const auto& decls = std::get<std::vector<AluDecl>>(p.alu->body);
      for (std::size_t i = 0; i < decls.size(); ++i) {
        const auto& d = decls[i];
        os << "      [\"" << to_string(d.op) << (d.immediate ? "_IMM" : "") << "\", [[" << d.dst.start << ", "
           << d.dst.stride << "], ";
        if (d.immediate) {
          os << d.scalar;
        } else {
          os << "[" << d.src.start << ", " << d.src.stride << "]";
        }
        os << ", " << d.iterations << "]]" << (i + 1 < decls.size() ? "," : "") << "\n";
      }
    }
    os << "    ]\n  },\n";
  }
  os << "  \"STORE\": {" << quoted(p.store.matrix) << ": [";
  if (p.store.vectors) {
    for (std::size_t i = 0; i < p.store.vectors->size(); ++i) {
      if (i) os << ", ";
      render_descriptor(os, (*p.store.vectors)[i]);
    }
  } else {
    os << quoted(p.store.matrix);
  }
  os << "]}";
  if (p.strategy) os << ",\n  \"STRATEGY\": " << *p.strategy;
  os << "\n}\n";
  return os.str();
}

std::vector<int> expand_descriptors(const std::vector<LoadDescriptor>& descriptors) {
  std::vector<int> out;
  for (const auto& d : descriptors) {
    for (int j = 0; j < d.count; ++j) out.push_back(d.start + j * d.stride);
  }
  return out;
}

namespace {

int round_up(int value, int multiple) { return (value + multiple - 1) / multiple * multiple; }

// Bounds-checks a strided sequence without expanding it.
void check_sequence(long long start, long long stride, long long count, long long limit, const std::string& where,
                    const std::string& what) {
  const long long last = start + (count - 1) * stride;
  if (start >= limit || last >= limit) {
    throw ShapeError(where + ": " + what + " index " + std::to_string(std::max(start, last)) + " outside [0, " +
                     std::to_string(limit) + ")");
  }
}

void check_descriptors(const std::vector<LoadDescriptor>& ds, long long limit, long long max_total,
                       const std::string& where, const std::string& what) {
  long long total = 0;
  for (const auto& d : ds) {
    check_sequence(d.start, d.stride, d.count, limit, where, what);
    total += d.count;
  }
  if (total > max_total) {
    throw ShapeError(where + ": selects " + std::to_string(total) + " " + what + "s, at most " +
                     std::to_string(max_total) + " fit");
  }
}

}  // namespace

PaddedProgram validate_shapes(const IrProgram& program, const VtaConfig& config) {
  config.validate();
  PaddedProgram out;
  out.program = program;
  out.config = config;
  const int bs = config.bs;
  for (const auto& m : program.matrices) {
    if (m.rows <= 0 || m.cols <= 0) {
      throw EmptyMatrixError("matrix '" + m.name + "' has a zero dimension (" + std::to_string(m.rows) + "x" +
                             std::to_string(m.cols) + ")");
    }
    out.shapes[m.name] = MatrixShape{m.rows, m.cols, round_up(m.rows, bs), round_up(m.cols, bs), bs};
  }
  const auto& c = out.output_shape();

  if (program.gemm) {
    const auto& a = out.shape(program.gemm->src);
    if (a.rows != c.rows) throw ShapeError("GEMM source rows differ from output rows");
    if (!program.gemm->scalar()) {
      const auto& b = out.shape(std::get<std::string>(program.gemm->rhs));
      if (b.rows != a.cols || b.cols != c.cols) throw ShapeError("GEMM operand shapes are inconsistent");
    }
    out.gemm_shape = BlockShape{a.block_rows(), a.block_cols(), c.block_cols()};
  }

  auto check_block_gather = [&](const std::optional<BufferLoad>& load, const char* where) {
    if (!load || load->descriptors.empty()) return;
    const auto& s = out.shape(load->matrix);
    check_descriptors(load->descriptors, s.blocks(), s.blocks(), where, "block");
    const auto idx = expand_descriptors(load->descriptors);
    if (static_cast<int>(idx.size()) != s.blocks()) {
      throw ShapeError(std::string(where) + ": loads " + std::to_string(idx.size()) + " blocks, the operand has " +
                       std::to_string(s.blocks()));
    }
  };
  check_block_gather(program.inp, "LOAD.INP");
  check_block_gather(program.wgt, "LOAD.WGT");

  if (program.acc && !program.acc->descriptors.empty()) {
    check_descriptors(program.acc->descriptors, out.shape(program.acc->matrix).vectors(), c.vectors(), "LOAD.ACC",
                      "vector");
  }

  if (program.alu) {
    if (const auto* decls = std::get_if<std::vector<AluDecl>>(&program.alu->body)) {
      long long total = 0;
      for (std::size_t i = 0; i < decls->size(); ++i) {
        const auto& d = (*decls)[i];
        total += d.iterations;
        if (total > (1LL << 24)) throw ShapeError("ALU: more than 2^24 vector operations");
        const auto where = "ALU[" + std::to_string(i) + "]";
        check_sequence(d.dst.start, d.dst.stride, d.iterations, c.vectors(), where, "destination vector");
        if (!d.immediate) check_sequence(d.src.start, d.src.stride, d.iterations, c.vectors(), where, "source vector");
      }
    }
  }

  if (program.store.vectors) {
    check_descriptors(*program.store.vectors, c.vectors(), c.vectors(), "STORE", "vector");
    const auto idx = expand_descriptors(*program.store.vectors);
    std::set<int> seen;
    for (int v : idx) {
      if (!seen.insert(v).second) throw ShapeError("STORE: vector " + std::to_string(v) + " is stored twice");
    }
  }
  return out;
}

}  // namespace vta
