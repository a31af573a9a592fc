#pragma once

#include <filesystem>

#include <json.hpp>

#include "collapselab/init.hpp"
#include "collapselab/net.hpp"
#include "collapselab/training.hpp"

namespace collapselab {

/// {"architecture", "layers": [{"weight" (row-major), "bias", ...}],
///  "activation", "normalization"}. Layout in schemas/network.schema.json.
nlohmann::json to_json(const Network& net);
/// Throws ShapeError on inconsistent documents.
Network network_from_json(const nlohmann::json& j);

Network load_network(const std::filesystem::path& path);

nlohmann::json to_json(const Architecture& arch);
Architecture architecture_from_json(const nlohmann::json& j);

nlohmann::json to_json(const InitializerSpec& spec);
InitializerSpec initializer_spec_from_json(const nlohmann::json& j);

/// Layout in schemas/train_report.schema.json.
nlohmann::json to_json(const TrainReport& report);

}  // namespace collapselab
