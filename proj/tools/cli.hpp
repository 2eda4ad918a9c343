#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace llmkey::cli {

inline constexpr const char* kToolVersion = "1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitStageFailure = 1;
inline constexpr int kExitConfigError = 2;

/// Runs one command line (without the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Problems found checking a keygen report against the documented schema;
/// empty when it conforms.
std::vector<std::string> validate_report(const nlohmann::json& report);

}  // namespace llmkey::cli
