#ifndef PIKL_POLICY_CHECKPOINT_H_
#define PIKL_POLICY_CHECKPOINT_H_

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pikl/hanabi/game.h"

namespace pikl::policy {

inline constexpr int kCheckpointVersion = 1;

// On-disk model file (JSON). `kind` tells the loader which model family the
// parameters belong to: "policy", "q", "belief".
struct Checkpoint {
  std::string kind;
  hanabi::GameConfig config;
  int encoder_schema_version = 0;
  std::vector<double> lambda_vocabulary;
  nlohmann::json params;
  nlohmann::json meta;  // free-form: training report, provenance of inputs

  nlohmann::json ToJson() const;
  // Throws FormatError on malformed input or a config-hash mismatch.
  static Checkpoint FromJson(const nlohmann::json& j);
};

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);

// Throws FormatError if the file is unreadable or malformed, ConfigError if
// `expected` is given and its hash differs from the stored config, and
// FormatError if `kind` is non-empty and differs.
Checkpoint LoadCheckpoint(const std::string& path, const std::string& kind = "",
                          const std::optional<hanabi::GameConfig>& expected = std::nullopt);

}  // namespace pikl::policy

#endif  // PIKL_POLICY_CHECKPOINT_H_
