#include "llmkey/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "llmkey/digest.hpp"
#include "llmkey/errors.hpp"

namespace llmkey {

std::string_view to_string(RecoverySource source) noexcept {
    return source == RecoverySource::LLM ? "llm" : "interpolation";
}

void LlmEndpointConfig::validate() const {
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (timeout.count() <= 0) throw ConfigError("timeout must be positive");
    if (model_name.empty()) throw ConfigError("model_name must not be empty");
    if (api_key_env_var.empty()) throw ConfigError("api_key_env_var must not be empty");
}

std::string prompt_hash(const std::string& prompt) {
    return to_hex(sha256(prompt));
}

std::string serialize_sequence(const std::vector<std::optional<double>>& values) {
    std::string out;
    out.reserve(values.size() * 5);
    char buf[32];
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(',');
        if (!values[i]) {
            out.push_back('?');
            continue;
        }
        std::snprintf(buf, sizeof buf, "%.2f", *values[i]);
        out += buf;
    }
    return out;
}

std::string build_prompt(const RecoveryRequest& req) {
    const auto& seq = req.normalized.values;
    const std::size_t missing = seq.size() - req.normalized.present_count();

    std::ostringstream p;
    p << req.instruction << "\n\n";
    p << req.context_note << " The measurements of " << to_string(req.party)
      << " were rescaled to [0, 1] and truncated to two decimal places. Only some probing "
         "instants were measured; each of the "
      << missing << " skipped instants is marked with '?'. The sequence has exactly "
      << seq.size()
      << " positions in time order. Recover the skipped values and return the complete "
         "sequence of exactly "
      << seq.size()
      << " comma-separated values with two decimal places, keeping the measured values "
         "unchanged.\n"
      << "Sequence: " << serialize_sequence(seq) << "\n\n";
    p << kReplyDirective;
    return p.str();
}

std::vector<double> parse_llm_reply(const std::string& reply, std::size_t expected_len) {
    if (expected_len < 2) throw ParameterError("expected_len must be at least 2");

    std::vector<double> out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ',' || std::isspace(static_cast<unsigned char>(c)); };
    while (i < reply.size()) {
        while (i < reply.size() && is_sep(reply[i])) ++i;
        if (i >= reply.size()) break;
        std::size_t j = i;
        while (j < reply.size() && !is_sep(reply[j])) ++j;
        const std::string token = reply.substr(i, j - i);
        i = j;

        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end != token.c_str() + token.size() || !std::isfinite(v)) {
            throw ParseError("non-numeric token '" + token + "' in model reply");
        }
        out.push_back(std::clamp(v, 0.0, 1.0));
    }
    if (out.size() != expected_len) {
        throw ParseError("model reply has " + std::to_string(out.size()) + " values, expected " +
                         std::to_string(expected_len));
    }
    return out;
}

RecoveredTrace recover_llm(const RecoveryRequest& req, const LlmEndpointConfig& cfg,
                           ChatTransport& transport) {
    cfg.validate();
    if (req.normalized.present_count() < 2) {
        throw ParameterError("recovery needs at least 2 probed values");
    }

    const ChatRequest chat{cfg.model_name, build_prompt(req), cfg.temperature};
    const std::size_t n = req.normalized.size();
    const int max_attempts = cfg.max_retries + 1;

    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        std::vector<double> values;
        try {
            values = parse_llm_reply(transport.complete(chat), n);
        } catch (const TransportError&) {
            continue;
        } catch (const ParseError&) {
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (req.normalized.values[i]) values[i] = *req.normalized.values[i];
        }
        return RecoveredTrace{std::move(values), RecoverySource::LLM, attempt};
    }

    RecoveredTrace fallback = recover_interpolate(req.normalized);
    fallback.attempts = max_attempts;
    return fallback;
}

RecoveredTrace recover_interpolate(const NormalizedTrace& normalized) {
    const auto& in = normalized.values;
    std::vector<std::size_t> known;
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i]) known.push_back(i);
    }
    if (known.size() < 2) throw ParameterError("interpolation needs at least 2 present values");

    std::vector<double> out(in.size());
    for (std::size_t i = 0; i < known.front(); ++i) out[i] = *in[known.front()];
    for (std::size_t i = known.back(); i < in.size(); ++i) out[i] = *in[known.back()];
    for (std::size_t k = 0; k + 1 < known.size(); ++k) {
        const std::size_t a = known[k];
        const std::size_t b = known[k + 1];
        const double va = *in[a];
        const double vb = *in[b];
        out[a] = va;
        for (std::size_t i = a + 1; i < b; ++i) {
            const double t = static_cast<double>(i - a) / static_cast<double>(b - a);
            out[i] = std::clamp(va + t * (vb - va), 0.0, 1.0);
        }
    }
    return RecoveredTrace{std::move(out), RecoverySource::Interpolation, 0};
}

double mse(std::span<const double> estimate, std::span<const double> truth) {
    if (estimate.size() != truth.size()) {
        throw DimensionError("mse: length mismatch (" + std::to_string(estimate.size()) + " vs " +
                             std::to_string(truth.size()) + ")");
    }
    if (truth.empty()) throw DimensionError("mse: empty sequences");
    double sum = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const double d = truth[i] - estimate[i];
        sum += d * d;
    }
    return sum / static_cast<double>(truth.size());
}

double mse(const RecoveredTrace& recovered, const NormalizedTrace& truth) {
    const std::vector<double> dense = truth.dense();
    return mse(recovered.values, dense);
}

}  // namespace llmkey
