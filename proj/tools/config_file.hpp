#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <json.hpp>

#include "llmkey/channel_model.hpp"
#include "llmkey/protocol.hpp"

namespace llmkey::cli {

enum class RecoveryChoice { Interpolation, LLM, Recorded };

/// Everything a command needs, with built-in defaults.
struct ToolConfig {
    SyntheticChannelConfig channel;
    SessionConfig session;
    RecoveryChoice recovery = RecoveryChoice::Interpolation;
    std::filesystem::path fixtures_dir;
    unsigned threads = 1;

    nlohmann::json to_json() const;
};

/// Reads `key = value` lines; `#` starts a comment. Throws ConfigError on
/// syntax errors or duplicate keys.
std::map<std::string, std::string> read_flat_config(const std::filesystem::path& path);

/// Applies entries over `cfg`. Throws ConfigError on unknown keys or bad values.
void apply_entries(ToolConfig& cfg, const std::map<std::string, std::string>& entries);

RecoveryChoice parse_recovery(const std::string& text);
std::string to_string(RecoveryChoice choice);

}  // namespace llmkey::cli
