#include "vta/config.hpp"

#include <fstream>

#include "vta/error.hpp"

namespace vta {

void VtaConfig::validate() const {
  if (bs < 2) throw ConfigError("bs must be >= 2, got " + std::to_string(bs));
  if (inp_size < 1 || wgt_size < 1 || acc_size < 1) {
    throw ConfigError("buffer capacities must be >= 1");
  }
  if (acc_size % bs != 0) {
    throw ConfigError("acc_size (" + std::to_string(acc_size) + ") must be a multiple of bs (" +
                      std::to_string(bs) + ")");
  }
}

VtaConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  VtaConfig c;
  auto read = [&](const char* key, int& field) {
    if (!j.contains(key)) throw ConfigError(std::string("config is missing '") + key + "'");
    const auto& v = j.at(key);
    if (!v.is_number_integer()) throw ConfigError(std::string("config '") + key + "' must be an integer");
    const auto value = v.get<long long>();
    if (value < 0 || value > (1LL << 30)) {
      throw ConfigError(std::string("config '") + key + "' out of range");
    }
    field = static_cast<int>(value);
  };
  read("bs", c.bs);
  read("inp_size", c.inp_size);
  read("wgt_size", c.wgt_size);
  read("acc_size", c.acc_size);
  for (const auto& [key, _] : j.items()) {
    if (key != "bs" && key != "inp_size" && key != "wgt_size" && key != "acc_size") {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.validate();
  return c;
}

nlohmann::json config_to_json(const VtaConfig& c) {
  return {{"bs", c.bs}, {"inp_size", c.inp_size}, {"wgt_size", c.wgt_size}, {"acc_size", c.acc_size}};
}

VtaConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace vta
