#include <cstdlib>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "llmkey/errors.hpp"
#include "llmkey/recovery.hpp"

namespace llmkey {

using nlohmann::json;

HttpChatTransport::HttpChatTransport(LlmEndpointConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    const char* key = std::getenv(cfg_.api_key_env_var.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError("environment variable " + cfg_.api_key_env_var +
                          " holding the API key is not set");
    }
    api_key_ = key;

    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("base_url must start with http:// or https://: " + cfg_.base_url);
    }
    const std::string scheme = cfg_.base_url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("unsupported scheme in base_url: " + scheme);
    }
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    host_ = cfg_.base_url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

std::string HttpChatTransport::complete(const ChatRequest& request) {
    // httplib clients are not shareable across threads; one per call.
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usecs =
        std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    client.set_bearer_token_auth(api_key_);

    const json body = {
        {"model", request.model},
        {"messages", json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
    };
    auto res = client.Post(path_prefix_ + "/chat/completions", body.dump(), "application/json");
    if (!res) {
        throw TransportError("chat request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status));
    }
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw TransportError(std::string("unexpected chat response body: ") + e.what());
    }
}

RecordedChatTransport::RecordedChatTransport(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!std::filesystem::is_directory(dir_)) {
        throw ConfigError("fixture directory does not exist: " + dir_.string());
    }
}

std::string RecordedChatTransport::complete(const ChatRequest& request) {
    const std::string key = prompt_hash(request.prompt);
    std::size_t index = 0;
    {
        std::lock_guard lock(mu_);
        ++calls_;
        index = served_[key]++;
    }

    const auto path = dir_ / (key + ".json");
    std::ifstream in(path);
    if (!in) throw TransportError("no recorded reply for prompt " + key);
    json fixture;
    try {
        in >> fixture;
    } catch (const json::exception& e) {
        throw TransportError("unreadable fixture " + path.string() + ": " + e.what());
    }
    const auto& replies = fixture.at("replies");
    if (!replies.is_array() || replies.empty()) {
        throw TransportError("fixture " + path.string() + " has no replies");
    }
    const auto& reply = replies.at(std::min(index, replies.size() - 1));
    if (reply.is_null()) throw TransportError("recorded transport failure for prompt " + key);
    return reply.get<std::string>();
}

std::size_t RecordedChatTransport::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

void RecordedChatTransport::record(const std::filesystem::path& dir, const std::string& prompt,
                                   const std::vector<std::optional<std::string>>& replies) {
    json arr = json::array();
    for (const auto& r : replies) arr.push_back(r ? json(*r) : json(nullptr));
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / (prompt_hash(prompt) + ".json"));
    if (!out) throw ConfigError("cannot write fixture into " + dir.string());
    out << json{{"replies", arr}}.dump(2) << '\n';
}

}  // namespace llmkey
