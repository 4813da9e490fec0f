#pragma once

#include <string>

#include "veclyap/model.hpp"

namespace testing {

/// Scalar systems written as {"x1": ("f", "g"), ...}, one state per subsystem.
inline veclyap::InterconnectedSystem scalar_system(const std::vector<std::pair<std::string, std::string>>& fg) {
  std::string vars, subs;
  for (std::size_t i = 0; i < fg.size(); ++i) {
    const std::string name = "x" + std::to_string(i + 1);
    vars += (i ? ",\"" : "\"") + name + "\"";
    subs += (i ? "," : "") + std::string("{\"id\":") + std::to_string(i + 1) + ",\"states\":[\"" + name +
            "\"],\"f\":[\"" + fg[i].first + "\"],\"g\":[\"" + fg[i].second + "\"],\"input_channels\":[\"" + name +
            "\"]}";
  }
  return veclyap::system_from_json("{\"variables\":[" + vars + "],\"subsystems\":[" + subs + "]}");
}

}  // namespace testing
