#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "rec/lab.hpp"

namespace rec {

using Json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Parse failures throw Error(kFormat) with the JSON path of the offending field.

Json model_to_json(const MlpModel& f);
Json model_to_json(const BinaryLinearClassifier& f);
/// Writes whichever concrete kind `f` is (mlp, linear, or blc).
Json model_to_json(const MulticlassClassifier& f);

/// "linear" and "mlp" load as MlpModel, "blc" as BlcAsMulticlass.
ModelPtr model_from_json(const Json& j, const std::string& where = "model");
BinaryLinearClassifier blc_from_json(const Json& j, const std::string& where = "model");

/// {"schema_version", "alpha", "members"}; members are inline model documents
/// or file paths, relative paths resolved against `base_dir`.
Json ensemble_to_json(const ModelEnsemble& rec);
ModelEnsemble ensemble_from_json(const Json& j, const std::filesystem::path& base_dir = {},
                                 const std::string& where = "ensemble");

Json dataset_to_json(const Dataset& data);
Dataset dataset_from_json(const Json& j, const std::string& where = "dataset");

Json attack_config_to_json(const AttackConfig& cfg);
/// Missing fields keep their defaults; p is a number or "inf", top_g an int or "all".
AttackConfig attack_config_from_json(const Json& j, const std::string& where = "attack_config");

Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);
/// Two-space indented dump with a trailing newline.
std::string pretty(const Json& j);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);

}  // namespace rec
