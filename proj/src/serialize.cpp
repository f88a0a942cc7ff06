#include "vta/serialize.hpp"

#include <fstream>
#include <iterator>

#include "vta/error.hpp"
#include "vta/matrix.hpp"

namespace vta {

namespace {

enum : std::uint8_t { kLoad = 0, kGemm = 1, kAlu = 2, kStore = 3 };
enum : std::uint16_t { kUop = 1, kMore = 2, kVector = 4, kImmediate = 8 };

struct Record {
  std::uint8_t opcode = 0;
  std::uint8_t unit = 0;
  std::uint16_t flags = 0;
  std::uint32_t f[4] = {0, 0, 0, 0};
  std::uint64_t offset = 0;
};

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get(const std::uint8_t* p, int bytes) {
  std::uint64_t v = 0;
  for (int b = 0; b < bytes; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

void emit(std::vector<std::uint8_t>& out, const Record& r) {
  put(out, r.opcode, 1);
  put(out, r.unit, 1);
  put(out, r.flags, 2);
  for (auto f : r.f) put(out, f, 4);
  put(out, r.offset, 8);
  put(out, 0, 4);  // reserved
}

template <typename Op>
void emit_runs(std::vector<std::uint8_t>& out, std::uint8_t opcode, std::uint8_t unit, const Op& op,
               const std::vector<int>& items, const std::vector<int>& slots, const Region& region, int step) {
  const auto runs = coalesce(items, slots, region.pitch(), step);
  for (std::size_t q = 0; q < runs.size(); ++q) {
    Record r;
    r.opcode = opcode;
    r.unit = unit;
    r.flags = static_cast<std::uint16_t>((q > 0 ? kMore : 0) | (op.item == Item::Vector ? kVector : 0));
    r.f[0] = static_cast<std::uint32_t>(op.region);
    r.f[1] = static_cast<std::uint32_t>(slots[runs[q].first]);
    r.f[2] = static_cast<std::uint32_t>(runs[q].width);
    r.f[3] = static_cast<std::uint32_t>(runs[q].height);
    r.offset = static_cast<std::uint64_t>(items[runs[q].first]);
    emit(out, r);
  }
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, const void* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace

std::vector<std::uint8_t> encode_stream(const OpStream& stream, const DramImage& image) {
  std::vector<std::uint8_t> out;
  const VtaOp* prev = nullptr;
  for (const auto& op : stream) {
    if (const auto* ld = std::get_if<LoadOp>(&op)) {
      const auto& region = image.regions.at(ld->region);
      const int step = ld->buffer == Buffer::Acc && ld->item == Item::Block ? region.bs : 1;
      std::vector<int> slots(ld->sources.size());
      for (std::size_t n = 0; n < slots.size(); ++n) slots[n] = ld->dest_slot + static_cast<int>(n) * step;
      emit_runs(out, kLoad, static_cast<std::uint8_t>(ld->buffer), *ld, ld->sources, slots, region, step);
    } else if (const auto* st = std::get_if<StoreOp>(&op)) {
      const auto& region = image.regions.at(st->region);
      emit_runs(out, kStore, 0, *st, st->dests, st->slots, region, st->item == Item::Block ? region.bs : 1);
    } else if (const auto* g = std::get_if<GemmOp>(&op)) {
      Record r;
      r.opcode = kGemm;
      r.flags = prev && std::holds_alternative<GemmOp>(*prev) ? kUop : 0;
      r.f[0] = static_cast<std::uint32_t>(g->acc_slot);
      r.f[1] = static_cast<std::uint32_t>(g->inp_slot);
      r.f[2] = static_cast<std::uint32_t>(g->wgt_slot);
      emit(out, r);
    } else {
      const auto& a = std::get<AluOp>(op);
      const auto* before = prev ? std::get_if<AluOp>(prev) : nullptr;
      Record r;
      r.opcode = kAlu;
      r.unit = static_cast<std::uint8_t>(a.op);
      r.flags = static_cast<std::uint16_t>(
          (before && before->op == a.op && before->immediate == a.immediate ? kUop : 0) | (a.immediate ? kImmediate : 0));
      r.f[0] = static_cast<std::uint32_t>(a.dst_slot);
      r.f[1] = static_cast<std::uint32_t>(a.src_slot);
      r.f[2] = static_cast<std::uint32_t>(a.imm);
      emit(out, r);
    }
    prev = &op;
  }
  return out;
}

OpStream decode_stream(const std::vector<std::uint8_t>& bytes, const DramImage& image, int bs) {
  if (bytes.size() % kRecordBytes != 0) throw IoError("instruction file is not a whole number of records");
  OpStream stream;
  for (std::size_t at = 0; at < bytes.size(); at += kRecordBytes) {
    const auto* p = bytes.data() + at;
    const std::size_t index = at / kRecordBytes;
    auto bad = [&](const std::string& what) { return IoError("record " + std::to_string(index) + ": " + what); };
    const auto opcode = static_cast<std::uint8_t>(get(p, 1));
    const auto unit = static_cast<std::uint8_t>(get(p + 1, 1));
    const auto flags = static_cast<std::uint16_t>(get(p + 2, 2));
    std::uint32_t f[4];
    for (int i = 0; i < 4; ++i) f[i] = static_cast<std::uint32_t>(get(p + 4 + 4 * i, 4));
    const auto offset = get(p + 20, 8);

    if (opcode == kGemm) {
      stream.push_back(GemmOp{static_cast<int>(f[0]), static_cast<int>(f[1]), static_cast<int>(f[2])});
      continue;
    }
    if (opcode == kAlu) {
      if (unit > static_cast<std::uint8_t>(AluOpcode::Shr)) throw bad("unknown ALU opcode");
      stream.push_back(AluOp{static_cast<AluOpcode>(unit), static_cast<int>(f[0]), (flags & kImmediate) != 0,
                             static_cast<int>(f[1]), static_cast<std::int32_t>(f[2])});
      continue;
    }
    if (opcode != kLoad && opcode != kStore) throw bad("unknown opcode " + std::to_string(opcode));
    if (f[0] >= image.regions.size()) throw bad("region out of range");
    if (f[2] == 0 || f[3] == 0) throw bad("empty run");
    const auto& region = image.regions[f[0]];
    const Item item = (flags & kVector) ? Item::Vector : Item::Block;
    const long long limit = item == Item::Block ? region.blocks() : region.vectors();
    if (offset + static_cast<std::uint64_t>(f[3] - 1) * region.pitch() + f[2] > static_cast<std::uint64_t>(limit)) {
      throw bad("run leaves its region");
    }
    std::vector<int> items;
    for (std::uint32_t h = 0; h < f[3]; ++h) {
      for (std::uint32_t w = 0; w < f[2]; ++w) items.push_back(static_cast<int>(offset + h * region.pitch() + w));
    }

    if (opcode == kLoad) {
      if (unit > static_cast<std::uint8_t>(Buffer::Acc)) throw bad("unknown buffer");
      const auto buffer = static_cast<Buffer>(unit);
      const int step = buffer == Buffer::Acc && item == Item::Block ? bs : 1;
      if (flags & kMore) {
        auto* last = stream.empty() ? nullptr : std::get_if<LoadOp>(&stream.back());
        if (!last || last->buffer != buffer || last->item != item || static_cast<std::uint32_t>(last->region) != f[0] ||
            last->dest_slot + static_cast<long long>(last->sources.size()) * step != f[1]) {
          throw bad("continuation does not extend the previous LOAD");
        }
        last->sources.insert(last->sources.end(), items.begin(), items.end());
      } else {
        stream.push_back(LoadOp{buffer, item, static_cast<int>(f[0]), std::move(items), static_cast<int>(f[1])});
      }
      continue;
    }

    const int step = item == Item::Block ? bs : 1;
    std::vector<int> slots(items.size());
    for (std::size_t n = 0; n < slots.size(); ++n) slots[n] = static_cast<int>(f[1]) + static_cast<int>(n) * step;
    if (flags & kMore) {
      auto* last = stream.empty() ? nullptr : std::get_if<StoreOp>(&stream.back());
      if (!last || last->item != item || static_cast<std::uint32_t>(last->region) != f[0]) {
        throw bad("continuation does not extend the previous STORE");
      }
      last->slots.insert(last->slots.end(), slots.begin(), slots.end());
      last->dests.insert(last->dests.end(), items.begin(), items.end());
    } else {
      stream.push_back(StoreOp{item, std::move(slots), static_cast<int>(f[0]), std::move(items)});
    }
  }
  return stream;
}

ArtifactBundle make_bundle(std::string name, const VtaConfig& config, DramImage image, OpStream stream,
                           const std::vector<std::int32_t>& dram) {
  ArtifactBundle b{std::move(name), config, std::move(image), std::move(stream), {}, {}};
  for (const auto& r : b.image.regions) {
    auto* dst = r.role == RegionRole::Weight ? &b.weights : r.role == RegionRole::Bias ? &b.biases : nullptr;
    if (dst) dst->insert(dst->end(), dram.begin() + r.offset, dram.begin() + r.offset + r.length);
  }
  return b;
}

void write_artifacts(const std::filesystem::path& dir, const ArtifactBundle& b) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const auto code = encode_stream(b.stream, b.image);
  write_bytes(dir / ("instructions" + b.name + ".bin"), code.data(), code.size());
  write_int32_file(dir / ("weight" + b.name + ".bin"), b.weights);
  write_int32_file(dir / ("bias" + b.name + ".bin"), b.biases);
  const nlohmann::json layout = {{"name", b.name}, {"config", config_to_json(b.config)}, {"dram", dram_to_json(b.image)}};
  const auto text = layout.dump(2) + "\n";
  write_bytes(dir / ("dram_layout" + b.name + ".json"), text.data(), text.size());
}

ArtifactBundle read_artifacts(const std::filesystem::path& dir) {
  std::vector<std::string> names;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto file = entry.path().filename().string();
    if (file.starts_with("instructions") && file.ends_with(".bin")) {
      names.push_back(file.substr(12, file.size() - 12 - 4));
    }
  }
  if (ec) throw IoError("cannot read " + dir.string() + ": " + ec.message());
  if (names.size() != 1) {
    throw IoError(dir.string() + " must hold exactly one instructions*.bin, found " + std::to_string(names.size()));
  }
  ArtifactBundle b;
  b.name = names[0];
  const auto layout_bytes = read_bytes(dir / ("dram_layout" + b.name + ".json"));
  nlohmann::json layout;
  try {
    layout = nlohmann::json::parse(layout_bytes.begin(), layout_bytes.end());
    b.config = config_from_json(layout.at("config"));
    b.image = dram_from_json(layout.at("dram"));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed DRAM layout: ") + e.what());
  }
  b.stream = decode_stream(read_bytes(dir / ("instructions" + b.name + ".bin")), b.image, b.config.bs);
  b.weights = read_int32_file(dir / ("weight" + b.name + ".bin"));
  b.biases = read_int32_file(dir / ("bias" + b.name + ".bin"));
  long long weight_len = 0;
  long long bias_len = 0;
  for (const auto& r : b.image.regions) {
    if (r.role == RegionRole::Weight) weight_len += r.length;
    if (r.role == RegionRole::Bias) bias_len += r.length;
  }
  if (static_cast<long long>(b.weights.size()) != weight_len) {
    throw IoError("weight file holds " + std::to_string(b.weights.size()) + " values, the layout needs " +
                  std::to_string(weight_len));
  }
  if (static_cast<long long>(b.biases.size()) != bias_len) {
    throw IoError("bias file holds " + std::to_string(b.biases.size()) + " values, the layout needs " +
                  std::to_string(bias_len));
  }
  return b;
}

std::vector<std::int32_t> initial_dram(const ArtifactBundle& b, const std::vector<std::int32_t>& inputs) {
  std::vector<std::int32_t> dram(static_cast<std::size_t>(b.image.size), 0);
  auto w = b.weights.begin();
  auto x = b.biases.begin();
  auto in = inputs.begin();
  long long needed = 0;
  for (const auto& r : b.image.regions) {
    if (r.role == RegionRole::Input) needed += static_cast<long long>(r.rows) * r.cols;
  }
  if (static_cast<long long>(inputs.size()) != needed) {
    throw IoError("input holds " + std::to_string(inputs.size()) + " values, the layer needs " +
                  std::to_string(needed));
  }
  for (const auto& r : b.image.regions) {
    if (r.role == RegionRole::Weight) {
      std::copy_n(w, r.length, dram.begin() + r.offset);
      w += r.length;
    } else if (r.role == RegionRole::Bias) {
      std::copy_n(x, r.length, dram.begin() + r.offset);
      x += r.length;
    } else if (r.role == RegionRole::Input) {
      Matrix m(r.rows, r.cols);
      std::copy_n(in, m.data.size(), m.data.begin());
      in += static_cast<long long>(m.data.size());
      place_matrix(dram, r, m);
    }
  }
  return dram;
}

}  // namespace vta
