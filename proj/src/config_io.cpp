#include "fdan/config_io.hpp"

namespace fdan {

void require_keys(const nlohmann::json& j,
                  std::initializer_list<const char*> allowed,
                  const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + ": expected a JSON object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* k : allowed)
      if (item.key() == k) {
        ok = true;
        break;
      }
    if (!ok)
      throw ConfigError(what + ": unknown key '" + item.key() + "'");
  }
}

nlohmann::json config_to_json(const FdanConfig& c) {
  return nlohmann::json{{"channels", c.channels}, {"blocks", c.blocks},
                        {"groups", c.groups},     {"scale", c.scale},
                        {"aggregate", c.aggregate}, {"seed", c.seed}};
}

FdanConfig config_from_json(const nlohmann::json& j) {
  require_keys(j, {"channels", "blocks", "groups", "scale", "aggregate", "seed"},
               "model config");
  FdanConfig c;
  try {
    if (j.contains("channels")) c.channels = j.at("channels").get<int>();
    if (j.contains("blocks")) c.blocks = j.at("blocks").get<int>();
    if (j.contains("groups")) c.groups = j.at("groups").get<int>();
    if (j.contains("scale")) c.scale = j.at("scale").get<int>();
    if (j.contains("aggregate")) c.aggregate = j.at("aggregate").get<bool>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_to_text(const FdanConfig& c) { return config_to_json(c).dump(); }

FdanConfig config_from_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model config: invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

}  // namespace fdan
