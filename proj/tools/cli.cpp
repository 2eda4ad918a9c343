#include "cli.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "config_file.hpp"
#include "llmkey/errors.hpp"
#include "llmkey/protocol.hpp"
#include "llmkey/seeds.hpp"

namespace llmkey::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> alpha;
    std::optional<std::string> recovery;
    std::string out = ".";
    std::optional<double> noise_sigma;
    std::optional<std::string> fixtures;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "Flat key = value config file");
    sub->add_option("--seed", f.seed, "Seed (channel seed for simulate, session seed otherwise)");
    sub->add_option("--alpha", f.alpha, "Probing ratio in (0, 1]");
    sub->add_option("--recovery", f.recovery, "llm | interpolation | recorded");
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--noise-sigma", f.noise_sigma, "Syndrome noise standard deviation");
    sub->add_option("--fixtures", f.fixtures, "Recorded-reply directory for --recovery recorded");
    sub->add_option("--threads", f.threads, "Worker threads for sweeps");
}

// Precedence: flags > config file > built-in defaults.
ToolConfig resolve_config(const CommonFlags& f, bool seed_is_channel) {
    ToolConfig cfg;
    if (!f.config.empty()) apply_entries(cfg, read_flat_config(f.config));
    if (f.seed) {
        if (seed_is_channel) cfg.channel.rng_seed = *f.seed;
        else cfg.session.session_seed = *f.seed;
    }
    if (f.alpha) cfg.session.alpha = *f.alpha;
    if (f.recovery) cfg.recovery = parse_recovery(*f.recovery);
    if (f.noise_sigma) cfg.session.syndrome_noise_sigma = *f.noise_sigma;
    if (f.fixtures) cfg.fixtures_dir = *f.fixtures;
    if (f.threads) {
        if (*f.threads == 0) throw ConfigError("--threads must be >= 1");
        cfg.threads = *f.threads;
    }
    cfg.session.recovery_mode =
        cfg.recovery == RecoveryChoice::Interpolation ? RecoveryMode::Interpolation : RecoveryMode::LLM;
    cfg.session.llm.api_key_env_var = "LLMKEY_API_KEY";
    return cfg;
}

fs::path prepare_out_dir(const std::string& out) {
    const fs::path dir(out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory " + out);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << text;
    if (!out) throw ConfigError("failed writing " + path.string());
}

json make_manifest(const std::string& command, const ToolConfig& cfg, const json& inputs,
                   const std::vector<fs::path>& artifacts) {
    json paths = json::array();
    for (const auto& p : artifacts) paths.push_back(p.filename().string());
    return {{"tool", "llmkey"},
            {"version", kToolVersion},
            {"command", command},
            {"config", cfg.to_json()},
            {"inputs", inputs},
            {"artifacts", paths}};
}

std::unique_ptr<ChatTransport> make_transport(const ToolConfig& cfg) {
    switch (cfg.recovery) {
        case RecoveryChoice::Interpolation: return nullptr;
        case RecoveryChoice::LLM: return std::make_unique<HttpChatTransport>(cfg.session.llm);
        case RecoveryChoice::Recorded:
            if (cfg.fixtures_dir.empty()) {
                throw ConfigError("--recovery recorded needs --fixtures or fixtures_dir");
            }
            return std::make_unique<RecordedChatTransport>(cfg.fixtures_dir);
    }
    return nullptr;
}

std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

int cmd_simulate(const CommonFlags& flags, std::ostream& out) {
    const ToolConfig cfg = resolve_config(flags, /*seed_is_channel=*/true);
    cfg.channel.validate();
    const fs::path dir = prepare_out_dir(flags.out);

    const auto [alice, bob] = generate_trace_pair(cfg.channel);
    const fs::path pa = dir / "alice.csv";
    const fs::path pb = dir / "bob.csv";
    write_trace_csv(pa, alice.values());
    write_trace_csv(pb, bob.values());
    const fs::path pm = dir / "manifest.json";
    write_text(pm, make_manifest("simulate", cfg, json::object(), {pa, pb}).dump(2) + "\n");

    out << "wrote " << alice.size() << " samples per party to " << dir.string() << '\n';
    return kExitOk;
}

std::pair<ChannelTrace, ChannelTrace> load_pair(const std::string& alice, const std::string& bob) {
    return {ingest_trace_csv(alice, Party::Alice), ingest_trace_csv(bob, Party::Bob)};
}

int cmd_keygen(const CommonFlags& flags, const std::string& alice_path, const std::string& bob_path,
               bool no_correction, std::ostream& out, std::ostream& err) {
    ToolConfig cfg = resolve_config(flags, /*seed_is_channel=*/false);
    if (no_correction) cfg.session.correction_enabled = false;
    cfg.session.validate();
    const auto [alice, bob] = load_pair(alice_path, bob_path);
    const auto transport = make_transport(cfg);
    const fs::path dir = prepare_out_dir(flags.out);

    const SessionReport report = run_session(cfg.session, alice, bob, transport.get());

    const fs::path pr = dir / "report.json";
    const fs::path pm = dir / "manifest.json";
    const json manifest =
        make_manifest("keygen", cfg, {{"alice", alice_path}, {"bob", bob_path}}, {pr});
    json j = to_json(report);
    j["manifest"] = manifest;
    write_text(pr, j.dump(2) + "\n");
    write_text(pm, manifest.dump(2) + "\n");

    if (!report.ok()) {
        err << "stage '" << *report.failed_stage << "' failed: " << report.error.value_or("") << '\n';
        return kExitStageFailure;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", report.kar);
    out << "kar=" << buf << " key_match=" << (report.key_match ? "true" : "false")
        << " digest=" << report.digest_hex << " recovery=" << report.recovery_source_alice << ","
        << report.recovery_source_bob << '\n';
    return kExitOk;
}

struct TrialOutcome {
    bool ok = false;
    double mse = 0.0;
    double kar = 0.0;
    std::string error;
};

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {std::nan(""), std::nan("")};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

int cmd_sweep(const CommonFlags& flags, const std::vector<double>& alphas, int trials,
              const std::string& alice_path, const std::string& bob_path, std::ostream& out,
              std::ostream& err) {
    ToolConfig cfg = resolve_config(flags, /*seed_is_channel=*/false);
    if (alphas.empty()) throw ConfigError("--alphas must list at least one value");
    for (double a : alphas) {
        if (!(a > 0.0 && a <= 1.0)) throw ConfigError("every alpha must lie in (0, 1]");
    }
    if (trials < 1) throw ConfigError("--trials must be >= 1");
    cfg.session.validate();
    cfg.channel.validate();

    std::optional<std::pair<ChannelTrace, ChannelTrace>> fixed;
    if (!alice_path.empty() || !bob_path.empty()) fixed = load_pair(alice_path, bob_path);
    const auto transport = make_transport(cfg);
    const fs::path dir = prepare_out_dir(flags.out);

    const std::size_t total = alphas.size() * static_cast<std::size_t>(trials);
    std::vector<TrialOutcome> outcomes(total);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t idx = next++; idx < total; idx = next++) {
            const std::size_t ai = idx / static_cast<std::size_t>(trials);
            const std::size_t ti = idx % static_cast<std::size_t>(trials);
            const std::uint64_t trial_seed = derive_seed(cfg.session.session_seed, {ai, ti});

            SessionConfig sc = cfg.session;
            sc.alpha = alphas[ai];
            sc.session_seed = trial_seed;
            TrialOutcome& o = outcomes[idx];
            try {
                SessionReport r;
                if (fixed) {
                    r = run_session(sc, fixed->first, fixed->second, transport.get());
                } else {
                    SyntheticChannelConfig ch = cfg.channel;
                    ch.rng_seed = derive_seed(trial_seed, "sweep/channel");
                    const auto [a, b] = generate_trace_pair(ch);
                    r = run_session(sc, a, b, transport.get());
                }
                if (r.ok()) {
                    o = {true, 0.5 * (r.mse_alice + r.mse_bob), r.kar, ""};
                } else {
                    o.error = *r.failed_stage + ": " + r.error.value_or("");
                }
            } catch (const std::exception& e) {
                o.error = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned n_threads = std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(total)));
    for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    std::ostringstream csv;
    csv << "alpha,mean_mse,std_mse,mean_kar,std_kar,trials\n";
    int failures = 0;
    for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        std::vector<double> m, k;
        for (int ti = 0; ti < trials; ++ti) {
            const auto& o = outcomes[ai * static_cast<std::size_t>(trials) + static_cast<std::size_t>(ti)];
            if (!o.ok) {
                ++failures;
                err << "alpha=" << alphas[ai] << " trial " << ti << " failed: " << o.error << '\n';
                continue;
            }
            m.push_back(o.mse);
            k.push_back(o.kar);
        }
        const auto [mm, sm] = mean_std(m);
        const auto [mk, sk] = mean_std(k);
        csv << format_real(alphas[ai]) << ',' << format_real(mm) << ',' << format_real(sm) << ','
            << format_real(mk) << ',' << format_real(sk) << ',' << m.size() << '\n';
    }
    const fs::path pc = dir / "sweep.csv";
    write_text(pc, csv.str());
    json inputs = {{"alphas", alphas}, {"trials", trials}};
    if (fixed) inputs["traces"] = {{"alice", alice_path}, {"bob", bob_path}};
    write_text(dir / "manifest.json", make_manifest("sweep", cfg, inputs, {pc}).dump(2) + "\n");

    out << csv.str();
    if (failures > 0) err << failures << " of " << total << " trials failed\n";
    return kExitOk;
}

int cmd_recover(const CommonFlags& flags, const std::string& trace_path, const std::string& party_name,
                std::ostream& out) {
    ToolConfig cfg = resolve_config(flags, /*seed_is_channel=*/false);
    if (party_name != "alice" && party_name != "bob") throw ConfigError("--party must be alice or bob");
    const Party party = party_name == "alice" ? Party::Alice : Party::Bob;
    if (!(cfg.session.alpha > 0.0 && cfg.session.alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    if (cfg.session.recovery_mode == RecoveryMode::LLM) cfg.session.llm.validate();

    const ChannelTrace trace = ingest_trace_csv(trace_path, party);
    const auto transport = make_transport(cfg);
    const fs::path dir = prepare_out_dir(flags.out);

    const auto seeds = SessionSeeds::derive(cfg.session.session_seed);
    const ProbedTrace probed = skip_probe(trace, cfg.session.alpha, seeds.probe);
    const NormalizedTrace norm = rescale_truncate(probed);
    RecoveredTrace rec;
    if (transport) {
        rec = recover_llm(RecoveryRequest{norm, party, cfg.session.context_note, std::string(kDefaultInstruction)},
                          cfg.session.llm, *transport);
    } else {
        rec = recover_interpolate(norm);
    }
    const NormalizedTrace truth = normalize_full(trace);
    const double err_mse = mse(rec, truth);

    const fs::path pr = dir / "recovered.csv";
    const fs::path pt = dir / "truth.csv";
    const fs::path pk = dir / "mask.csv";
    write_trace_csv(pr, rec.values);
    write_trace_csv(pt, truth.dense());
    write_mask_csv(pk, probed);
    write_text(dir / "manifest.json",
               make_manifest("recover", cfg, {{"trace", trace_path}, {"party", party_name}}, {pr, pt, pk})
                       .dump(2) +
                   "\n");

    out << "mse=" << format_real(err_mse) << " source=" << to_string(rec.source)
        << " attempts=" << rec.attempts << " probed=" << probed.n_probed << "/" << probed.size() << '\n';
    return kExitOk;
}

KeyBits parse_key_text(const std::string& text) {
    std::vector<std::uint8_t> bits;
    for (char c : text) {
        if (c != '0' && c != '1') throw ConfigError("keys must be written as 0/1 strings");
        bits.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    return KeyBits(std::move(bits));
}

int cmd_eval(const std::string& truth, const std::string& estimate, const std::string& key_a,
             const std::string& key_b, std::ostream& out) {
    bool did = false;
    if (!truth.empty() || !estimate.empty()) {
        if (truth.empty() || estimate.empty()) throw ConfigError("--truth and --estimate go together");
        const auto t = ingest_trace_csv(truth, Party::Alice);
        const auto e = ingest_trace_csv(estimate, Party::Alice);
        out << "mse=" << format_real(mse(e.values(), t.values())) << '\n';
        did = true;
    }
    if (!key_a.empty() || !key_b.empty()) {
        const double k = kar(parse_key_text(key_a), parse_key_text(key_b));
        out << "kar=" << format_real(k) << '\n';
        did = true;
    }
    if (!did) throw ConfigError("eval needs --truth/--estimate or --key-a/--key-b");
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Physical-layer key generation with skipped probing and perturbed compressed sensing",
                 "llmkey"};
    app.require_subcommand(1);

    CommonFlags sim_flags, key_flags, sweep_flags, rec_flags;
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic Alice/Bob trace pair");
    add_common(sim, sim_flags);

    std::string alice, bob;
    bool no_correction = false;
    auto* keygen = app.add_subcommand("keygen", "Run one key-establishment session");
    add_common(keygen, key_flags);
    keygen->add_option("--alice", alice, "Alice trace CSV")->required();
    keygen->add_option("--bob", bob, "Bob trace CSV")->required();
    keygen->add_flag("--no-correction", no_correction, "Skip syndrome-based error correction");

    std::vector<double> alphas;
    int trials = 20;
    std::string sweep_alice, sweep_bob;
    auto* sweep = app.add_subcommand("sweep", "Mean MSE and KAR across probing ratios");
    add_common(sweep, sweep_flags);
    sweep->add_option("--alphas", alphas, "Probing ratios")->delimiter(',')->required();
    sweep->add_option("--trials", trials, "Sessions per ratio");
    sweep->add_option("--alice", sweep_alice, "Use this Alice trace instead of synthetic pairs");
    sweep->add_option("--bob", sweep_bob, "Use this Bob trace instead of synthetic pairs");

    std::string trace_path, party = "alice";
    auto* recover = app.add_subcommand("recover", "Skip-probe, normalize and recover one trace");
    add_common(recover, rec_flags);
    recover->add_option("--trace", trace_path, "Trace CSV")->required();
    recover->add_option("--party", party, "alice | bob");

    std::string truth, estimate, key_a, key_b;
    auto* eval = app.add_subcommand("eval", "MSE between two traces or KAR between two keys");
    eval->add_option("--truth", truth, "Reference trace CSV");
    eval->add_option("--estimate", estimate, "Estimated trace CSV");
    eval->add_option("--key-a", key_a, "Key as a 0/1 string");
    eval->add_option("--key-b", key_b, "Key as a 0/1 string");

    std::vector<std::string> argv_store{"llmkey"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : argv_store) argv.push_back(s.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitConfigError;
    }

    try {
        if (*sim) return cmd_simulate(sim_flags, out);
        if (*keygen) return cmd_keygen(key_flags, alice, bob, no_correction, out, err);
        if (*sweep) return cmd_sweep(sweep_flags, alphas, trials, sweep_alice, sweep_bob, out, err);
        if (*recover) return cmd_recover(rec_flags, trace_path, party, out);
        if (*eval) return cmd_eval(truth, estimate, key_a, key_b, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const IngestError& e) {
        err << "input error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const ParameterError& e) {
        err << "invalid parameter: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitStageFailure;
    }
    return kExitConfigError;
}

std::vector<std::string> validate_report(const json& r) {
    std::vector<std::string> problems;
    auto need = [&](const char* key, auto pred, const char* type) {
        if (!r.contains(key)) {
            problems.push_back(std::string("missing field ") + key);
        } else if (!pred(r.at(key))) {
            problems.push_back(std::string(key) + " must be " + type);
        }
    };
    auto is_number = [](const json& v) { return v.is_number(); };
    auto is_unit = [](const json& v) { return v.is_number() && v.get<double>() >= 0.0 && v.get<double>() <= 1.0; };
    auto is_nonneg = [](const json& v) { return v.is_number() && v.get<double>() >= 0.0; };
    auto is_hex32 = [](const json& v) {
        if (!v.is_string()) return false;
        const auto s = v.get<std::string>();
        return s.size() == 32 && s.find_first_not_of("0123456789abcdef") == std::string::npos;
    };
    const bool aborted = r.contains("stage");

    need("kar", is_unit, "a number in [0, 1]");
    need("key_match", [](const json& v) { return v.is_boolean(); }, "a boolean");
    need("mse_alice", is_nonneg, "a nonnegative number");
    need("mse_bob", is_nonneg, "a nonnegative number");
    if (!aborted) {
        need("digest_hex", is_hex32, "32 lowercase hex digits");
        need("alice_digest_hex", is_hex32, "32 lowercase hex digits");
    }
    need("timings_ms", [&](const json& v) {
        if (!v.is_object()) return false;
        for (const auto& [k, t] : v.items()) {
            if (!is_nonneg(t)) return false;
        }
        return true;
    }, "an object of nonnegative numbers");
    need("solver_iters", [](const json& v) {
        if (!v.is_array()) return false;
        for (const auto& x : v) {
            if (!x.is_number_integer()) return false;
        }
        return true;
    }, "an array of integers");
    need("solver_converged", [](const json& v) { return v.is_array(); }, "an array of booleans");
    need("recovery_source", [](const json& v) {
        auto ok = [](const json& s) { return s.is_string() && (s == "llm" || s == "interpolation" || s == ""); };
        return v.is_object() && v.contains("alice") && v.contains("bob") && ok(v["alice"]) && ok(v["bob"]);
    }, "an object with alice/bob sources");
    need("manifest", [](const json& v) {
        return v.is_object() && v.contains("tool") && v.contains("version") && v.contains("config");
    }, "a manifest object");
    if (aborted) {
        need("stage", [](const json& v) { return v.is_string(); }, "a string");
        need("error", [](const json& v) { return v.is_string(); }, "a string");
    }
    if (r.contains("kar") && r.contains("key_match") && is_number(r["kar"]) && r["key_match"].is_boolean()) {
        if ((r["kar"].get<double>() == 1.0) != r["key_match"].get<bool>()) {
            problems.push_back("kar == 1 must coincide with key_match");
        }
    }
    return problems;
}

}  // namespace llmkey::cli
