#include "pikl/policy/checkpoint.h"

#include <fstream>

#include "pikl/errors.h"
#include "pikl/policy/features.h"

namespace pikl::policy {

namespace {
constexpr const char* kFormat = "pikl-checkpoint";
}

nlohmann::json Checkpoint::ToJson() const {
  return {{"format", kFormat},
          {"version", kCheckpointVersion},
          {"kind", kind},
          {"config", config.ToJson()},
          {"config_hash", std::to_string(config.Hash())},
          {"encoder_schema_version", encoder_schema_version},
          {"lambda_vocabulary", lambda_vocabulary},
          {"params", params},
          {"meta", meta.is_null() ? nlohmann::json::object() : meta}};
}

Checkpoint Checkpoint::FromJson(const nlohmann::json& j) {
  Checkpoint c;
  try {
    if (j.at("format").get<std::string>() != kFormat) throw FormatError("not a checkpoint file");
    const int v = j.at("version").get<int>();
    if (v != kCheckpointVersion) {
      throw FormatError("checkpoint version " + std::to_string(v) + " is not supported");
    }
    c.kind = j.at("kind").get<std::string>();
    c.config = hanabi::GameConfig::FromJson(j.at("config"));
    if (j.at("config_hash").get<std::string>() != std::to_string(c.config.Hash())) {
      throw FormatError("checkpoint config hash does not match its stored config");
    }
    c.encoder_schema_version = j.at("encoder_schema_version").get<int>();
    if (c.encoder_schema_version != kEncoderSchemaVersion) {
      throw FormatError("checkpoint was written with encoder schema " +
                        std::to_string(c.encoder_schema_version) + ", this build uses " +
                        std::to_string(kEncoderSchemaVersion));
    }
    c.lambda_vocabulary = j.at("lambda_vocabulary").get<std::vector<double>>();
    c.params = j.at("params");
    if (j.contains("meta")) c.meta = j["meta"];
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint config: ") + e.what());
  }
  return c;
}

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write checkpoint " + path);
  out << ckpt.ToJson().dump() << "\n";
  if (!out) throw FormatError("failed writing checkpoint " + path);
}

Checkpoint LoadCheckpoint(const std::string& path, const std::string& kind,
                          const std::optional<hanabi::GameConfig>& expected) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open checkpoint " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  Checkpoint c = Checkpoint::FromJson(j);
  if (!kind.empty() && c.kind != kind) {
    throw FormatError(path + " holds a '" + c.kind + "' model, expected '" + kind + "'");
  }
  if (expected && expected->Hash() != c.config.Hash()) {
    throw ConfigError(path + " was trained for a different game config (hash " +
                      std::to_string(c.config.Hash()) + ", expected " +
                      std::to_string(expected->Hash()) + ")");
  }
  return c;
}

}  // namespace pikl::policy
