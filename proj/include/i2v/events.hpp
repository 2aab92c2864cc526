#pragma once

#include <functional>

#include <json.hpp>

namespace i2v {

/// Receives one JSON object per notable event; "time", "kind" and "node" are always set.
using EventSink = std::function<void(const nlohmann::json&)>;

}  // namespace i2v
