#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "llmkey/channel_model.hpp"

namespace llmkey {

enum class RecoverySource { LLM, Interpolation };

std::string_view to_string(RecoverySource source) noexcept;

inline constexpr std::string_view kDefaultInstruction =
    "You are an expert in wireless channel measurement. Use your knowledge of how "
    "received signal strength measurements between two moving radios evolve over time, "
    "including their smoothness and short-term fading, to fill in missing samples.";

inline constexpr std::string_view kDefaultContextNote =
    "Two LoRa nodes exchanged probe packets at regular intervals and each recorded the "
    "adjacent relative RSSI (arRSSI) of the packets it received.";

/// The closing directive of every recovery prompt.
inline constexpr std::string_view kReplyDirective =
    "Do not say anything like 'the decompressed sequence is', just return the "
    "decompressed sequence.";

struct RecoveryRequest {
    NormalizedTrace normalized;
    Party party = Party::Alice;
    std::string context_note{kDefaultContextNote};
    std::string instruction{kDefaultInstruction};
};

/// Full-length sequence in [0, 1]. Probed positions carry their input value.
struct RecoveredTrace {
    std::vector<double> values;
    RecoverySource source = RecoverySource::Interpolation;
    int attempts = 0;
};

struct LlmEndpointConfig {
    std::string base_url = "https://api.openai.com/v1";
    std::string model_name = "gpt-4";
    std::string api_key_env_var = "LLMKEY_API_KEY";
    std::chrono::milliseconds timeout{60000};
    int max_retries = 2;
    double temperature = 0.0;

    /// Throws ConfigError.
    void validate() const;
};

struct ChatRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.0;
};

/// Sends one chat completion and returns the first choice's message text.
/// Implementations throw TransportError on network or protocol failure and
/// must be safe to call from several threads.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
};

/// POSTs to `{base_url}/chat/completions` with a bearer token read from the
/// configured environment variable.
class HttpChatTransport final : public ChatTransport {
public:
    /// Throws ConfigError when the key variable is unset or empty, or the
    /// URL is not http(s).
    explicit HttpChatTransport(LlmEndpointConfig cfg);

    std::string complete(const ChatRequest& request) override;

private:
    LlmEndpointConfig cfg_;
    std::string api_key_;
    std::string host_;  // scheme://host[:port]
    std::string path_prefix_;
};

/// Replays replies from `<dir>/<prompt-hash>.json` fixtures.
///
/// A fixture is `{"replies": ["...", ...]}`; the k-th request for a prompt
/// gets `replies[min(k, size - 1)]`. A reply given as `null` simulates a
/// transport failure, as does a missing fixture.
class RecordedChatTransport final : public ChatTransport {
public:
    explicit RecordedChatTransport(std::filesystem::path dir);

    std::string complete(const ChatRequest& request) override;

    std::size_t calls() const;

    /// Writes a fixture for `prompt` into `dir`.
    static void record(const std::filesystem::path& dir, const std::string& prompt,
                       const std::vector<std::optional<std::string>>& replies);

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, std::size_t> served_;
    std::size_t calls_ = 0;
};

/// Hex SHA-256 of the prompt text; the fixture key for recorded replies.
std::string prompt_hash(const std::string& prompt);

/// Comma-separated two-decimal values, `?` at absent positions.
std::string serialize_sequence(const std::vector<std::optional<double>>& values);

std::string build_prompt(const RecoveryRequest& req);

/// Splits on commas and whitespace, parses every token as a real and clamps
/// it to [0, 1]. Throws ParseError unless exactly `expected_len` finite
/// numbers are found and nothing else.
std::vector<double> parse_llm_reply(const std::string& reply, std::size_t expected_len);

/// Asks the model for the full sequence, retrying up to `max_retries` times
/// on transport or parse failure, then falls back to interpolation.
/// Probed positions always keep their measured value.
RecoveredTrace recover_llm(const RecoveryRequest& req, const LlmEndpointConfig& cfg,
                           ChatTransport& transport);

/// Linear interpolation between nearest present neighbours, constant hold
/// beyond the first and last present samples.
RecoveredTrace recover_interpolate(const NormalizedTrace& normalized);

double mse(std::span<const double> estimate, std::span<const double> truth);
double mse(const RecoveredTrace& recovered, const NormalizedTrace& truth);

}  // namespace llmkey
