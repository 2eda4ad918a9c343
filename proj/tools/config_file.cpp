#include "config_file.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>

#include "llmkey/errors.hpp"

namespace llmkey::cli {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double d = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const int base = v.rfind("0x", 0) == 0 ? 16 : 10;
    const char* first = v.data() + (base == 16 ? 2 : 0);
    auto [ptr, ec] = std::from_chars(first, v.data() + v.size(), out, base);
    if (ec != std::errc() || ptr != v.data() + v.size() || first == v.data() + v.size()) {
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    }
    return out;
}

int to_int(const std::string& key, const std::string& v) {
    int out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

using Setter = std::function<void(ToolConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"n_total", [](ToolConfig& c, const std::string& k, const std::string& v) {
             const int n = to_int(k, v);
             if (n < 0) throw ConfigError("n_total must be nonnegative");
             c.channel.n_total = static_cast<std::size_t>(n);
         }},
        {"rho", [](ToolConfig& c, const std::string& k, const std::string& v) { c.channel.rho = to_double(k, v); }},
        {"measurement_noise_sigma", [](ToolConfig& c, const std::string& k, const std::string& v) {
             c.channel.measurement_noise_sigma = to_double(k, v);
         }},
        {"smoothness_halflife", [](ToolConfig& c, const std::string& k, const std::string& v) {
             c.channel.smoothness_halflife = to_double(k, v);
         }},
        {"channel_seed", [](ToolConfig& c, const std::string& k, const std::string& v) { c.channel.rng_seed = to_u64(k, v); }},
        {"key_len", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.sensing.key_len = to_int(k, v); }},
        {"zero_gap", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.sensing.zero_gap = to_int(k, v); }},
        {"m_key", [](ToolConfig& c, const std::string& k, const std::string& v) {
             if (v == "auto") c.session.sensing.m_key.reset();
             else c.session.sensing.m_key = to_int(k, v);
         }},
        {"m_chk", [](ToolConfig& c, const std::string& k, const std::string& v) {
             if (v == "auto") c.session.sensing.m_chk.reset();
             else c.session.sensing.m_chk = to_int(k, v);
         }},
        {"theta", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.sensing.theta = to_double(k, v); }},
        {"a0_seed", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.sensing.a0_seed = to_u64(k, v); }},
        {"lambda", [](ToolConfig& c, const std::string& k, const std::string& v) {
             if (v == "auto") c.session.solver.lambda.reset();
             else c.session.solver.lambda = to_double(k, v);
         }},
        {"max_iters", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.solver.max_iters = to_int(k, v); }},
        {"tol", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.solver.tol = to_double(k, v); }},
        {"solver_mode", [](ToolConfig& c, const std::string& k, const std::string& v) {
             if (v == "lasso") c.session.solver.mode = SolverMode::Lasso;
             else if (v == "tls") c.session.solver.mode = SolverMode::TlsReduced;
             else throw ConfigError(k + ": expected lasso or tls, got '" + v + "'");
         }},
        {"step_rule", [](ToolConfig& c, const std::string& k, const std::string& v) {
             if (v == "fixed") c.session.solver.step_rule = StepRule::FixedLipschitz;
             else if (v == "backtracking") c.session.solver.step_rule = StepRule::Backtracking;
             else throw ConfigError(k + ": expected fixed or backtracking, got '" + v + "'");
         }},
        {"syndrome_noise_sigma", [](ToolConfig& c, const std::string& k, const std::string& v) {
             c.session.syndrome_noise_sigma = to_double(k, v);
         }},
        {"recovery", [](ToolConfig& c, const std::string&, const std::string& v) { c.recovery = parse_recovery(v); }},
        {"fixtures_dir", [](ToolConfig& c, const std::string&, const std::string& v) { c.fixtures_dir = v; }},
        {"session_seed", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.session_seed = to_u64(k, v); }},
        {"alpha", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.alpha = to_double(k, v); }},
        {"context_note", [](ToolConfig& c, const std::string&, const std::string& v) { c.session.context_note = v; }},
        {"correction", [](ToolConfig& c, const std::string& k, const std::string& v) {
             c.session.correction_enabled = to_bool(k, v);
         }},
        {"llm_base_url", [](ToolConfig& c, const std::string&, const std::string& v) { c.session.llm.base_url = v; }},
        {"llm_model", [](ToolConfig& c, const std::string&, const std::string& v) { c.session.llm.model_name = v; }},
        {"llm_timeout_ms", [](ToolConfig& c, const std::string& k, const std::string& v) {
             c.session.llm.timeout = std::chrono::milliseconds(to_int(k, v));
         }},
        {"llm_max_retries", [](ToolConfig& c, const std::string& k, const std::string& v) { c.session.llm.max_retries = to_int(k, v); }},
        {"llm_temperature", [](ToolConfig& c, const std::string& k, const std::string& v) {
             c.session.llm.temperature = to_double(k, v);
         }},
        {"threads", [](ToolConfig& c, const std::string& k, const std::string& v) {
             const int t = to_int(k, v);
             if (t < 1) throw ConfigError("threads must be >= 1");
             c.threads = static_cast<unsigned>(t);
         }},
    };
    return table;
}

}  // namespace

RecoveryChoice parse_recovery(const std::string& text) {
    if (text == "interpolation") return RecoveryChoice::Interpolation;
    if (text == "llm") return RecoveryChoice::LLM;
    if (text == "recorded") return RecoveryChoice::Recorded;
    throw ConfigError("recovery must be llm, interpolation, or recorded; got '" + text + "'");
}

std::string to_string(RecoveryChoice choice) {
    switch (choice) {
        case RecoveryChoice::Interpolation: return "interpolation";
        case RecoveryChoice::LLM: return "llm";
        case RecoveryChoice::Recorded: return "recorded";
    }
    return "interpolation";
}

std::map<std::string, std::string> read_flat_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty key");
        if (!out.emplace(key, trim(line.substr(eq + 1))).second) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": duplicate key " + key);
        }
    }
    return out;
}

void apply_entries(ToolConfig& cfg, const std::map<std::string, std::string>& entries) {
    const auto& table = setters();
    for (const auto& [key, value] : entries) {
        const auto it = table.find(key);
        if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
        it->second(cfg, key, value);
    }
}

nlohmann::json ToolConfig::to_json() const {
    const auto& s = session;
    nlohmann::json j;
    j["channel"] = {{"n_total", channel.n_total},
                    {"rho", channel.rho},
                    {"measurement_noise_sigma", channel.measurement_noise_sigma},
                    {"smoothness_halflife", channel.smoothness_halflife},
                    {"channel_seed", channel.rng_seed}};
    j["sensing"] = {{"key_len", s.sensing.key_len},
                    {"zero_gap", s.sensing.zero_gap},
                    {"sparse_len", s.sensing.sparse_len()},
                    {"m_key", s.sensing.rows_key()},
                    {"m_chk", s.sensing.rows_chk()},
                    {"theta", s.sensing.theta},
                    {"a0_seed", s.sensing.a0_seed}};
    j["solver"] = {{"lambda", s.solver.lambda ? nlohmann::json(*s.solver.lambda) : nlohmann::json("auto")},
                   {"max_iters", s.solver.max_iters},
                   {"tol", s.solver.tol},
                   {"mode", s.solver.mode == SolverMode::Lasso ? "lasso" : "tls"},
                   {"step_rule", s.solver.step_rule == StepRule::FixedLipschitz ? "fixed" : "backtracking"}};
    j["session"] = {{"session_seed", s.session_seed},
                    {"alpha", s.alpha},
                    {"syndrome_noise_sigma", s.syndrome_noise_sigma},
                    {"recovery", to_string(recovery)},
                    {"correction", s.correction_enabled}};
    if (recovery == RecoveryChoice::LLM) {
        j["llm"] = {{"base_url", s.llm.base_url},
                    {"model", s.llm.model_name},
                    {"timeout_ms", s.llm.timeout.count()},
                    {"max_retries", s.llm.max_retries},
                    {"temperature", s.llm.temperature}};
    }
    if (recovery == RecoveryChoice::Recorded) j["fixtures_dir"] = fixtures_dir.string();
    return j;
}

}  // namespace llmkey::cli
