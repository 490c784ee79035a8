#pragma once

#include <initializer_list>
#include <string>

#include <json.hpp>

#include "fdan/model.hpp"

namespace fdan {

// Rejects any key not in `allowed`; throws ConfigError naming the intruder.
void require_keys(const nlohmann::json& j,
                  std::initializer_list<const char*> allowed,
                  const std::string& what);

nlohmann::json config_to_json(const FdanConfig& c);
FdanConfig config_from_json(const nlohmann::json& j);

std::string config_to_text(const FdanConfig& c);
FdanConfig config_from_text(const std::string& text);

}  // namespace fdan
