#include "llmkey/protocol.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "llmkey/digest.hpp"
#include "llmkey/errors.hpp"
#include "llmkey/seeds.hpp"

namespace llmkey {

void SessionConfig::validate() const {
    sensing.validate();
    solver.validate();
    if (!(syndrome_noise_sigma >= 0.0)) throw ConfigError("syndrome_noise_sigma must be >= 0");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in (0, 1]");
    if (recovery_mode == RecoveryMode::LLM) llm.validate();
    for (std::size_t pos : inject_flips) {
        if (pos >= static_cast<std::size_t>(sensing.key_len)) {
            throw ConfigError("injected flip position out of range");
        }
    }
}

SessionSeeds SessionSeeds::derive(std::uint64_t session_seed) {
    return {derive_seed(session_seed, "session/probe"), derive_seed(session_seed, "session/key"),
            derive_seed(session_seed, "session/noise")};
}

nlohmann::json to_json(const SessionReport& r) {
    nlohmann::json j;
    j["kar"] = r.kar;
    j["key_match"] = r.key_match;
    j["mse_alice"] = r.mse_alice;
    j["mse_bob"] = r.mse_bob;
    j["digest_hex"] = r.digest_hex;
    j["alice_digest_hex"] = r.alice_digest_hex;
    j["timings_ms"] = r.timings_ms;
    j["solver_iters"] = r.solver_iters;
    j["solver_converged"] = r.solver_converged;
    j["recovery_source"] = {{"alice", r.recovery_source_alice}, {"bob", r.recovery_source_bob}};
    j["recovery_attempts"] = {{"alice", r.recovery_attempts_alice},
                              {"bob", r.recovery_attempts_bob}};
    j["key_errors_before_correction"] = r.key_errors_before_correction;
    j["bits_flipped_by_correction"] = r.bits_flipped_by_correction;
    if (r.failed_stage) {
        j["stage"] = *r.failed_stage;
        j["error"] = r.error.value_or("");
    }
    return j;
}

Syndrome alice_round(const KeyBits& key, const PerturbedOperators& ops_a) {
    return compress(key, ops_a);
}

Syndrome channel_transmit(const Syndrome& syn, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw ParameterError("noise sigma must be nonnegative");
    if (sigma == 0.0) return syn;
    std::mt19937_64 rng(derive_seed(seed, "channel/noise"));
    std::normal_distribution<double> noise(0.0, sigma);
    Syndrome out = syn;
    for (auto& v : out.syn1) v += noise(rng);
    for (auto& v : out.syn2) v += noise(rng);
    return out;
}

Reconstruction bob_reconstruct(const Syndrome& syn_rx, const PerturbedOperators& ops_b,
                               const SolverConfig& solver_cfg) {
    SolveResult sol = solve(ops_b.a_key, syn_rx.syn1, solver_cfg);
    KeyBits key = round_to_bits(desparsify(sol.x, ops_b.zero_gap));
    return {std::move(key), std::move(sol)};
}

Correction bob_correct(const KeyBits& kb_prime, const Vector& syn2_rx,
                       const PerturbedOperators& ops_b, const SolverConfig& solver_cfg) {
    if (syn2_rx.size() != ops_b.a_chk.rows()) {
        throw DimensionError("syn2 length does not match the check operator");
    }
    if (static_cast<Eigen::Index>(kb_prime.size()) != ops_b.a_chk.cols()) {
        throw DimensionError("key length does not match the check operator");
    }
    const Vector delta = ops_b.a_chk * kb_prime.to_real() - syn2_rx;

    // The mismatch problem carries no operator perturbation term: plain lasso.
    SolverConfig cfg = solver_cfg;
    cfg.mode = SolverMode::Lasso;
    SolveResult sol = solve(ops_b.a_chk, delta, cfg);

    Correction out{kb_prime, round_to_trits(sol.x), std::move(sol)};
    for (std::size_t i = 0; i < out.mismatch.size(); ++i) {
        if (out.mismatch[i] != 0) out.key.flip(i);
    }
    return out;
}

KeyDigest privacy_amplify(const KeyBits& key) {
    const auto packed = key.pack();
    const Sha256Digest full = sha256(packed);
    KeyDigest out{};
    std::copy_n(full.begin(), out.size(), out.begin());
    return out;
}

double kar(const KeyBits& a, const KeyBits& b) {
    if (a.size() != b.size()) {
        throw DimensionError("kar: key lengths differ (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
    }
    if (a.size() == 0) throw DimensionError("kar: empty keys");
    std::size_t same = 0;
    for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
    return static_cast<double>(same) / static_cast<double>(a.size());
}

namespace {

class StageClock {
public:
    explicit StageClock(SessionReport& report) : report_(report) {}

    template <typename F>
    auto run(const char* stage, F&& f) {
        current_ = stage;
        const auto start = std::chrono::steady_clock::now();
        auto result = f();
        const auto end = std::chrono::steady_clock::now();
        report_.timings_ms[stage] += std::chrono::duration<double, std::milli>(end - start).count();
        return result;
    }

    const char* current() const noexcept { return current_; }

private:
    SessionReport& report_;
    const char* current_ = "config";
};

}  // namespace

SessionReport run_session(const SessionConfig& cfg, const ChannelTrace& alice,
                          const ChannelTrace& bob, ChatTransport* transport) {
    SessionReport report;
    StageClock clock(report);
    try {
        cfg.validate();
        if (alice.size() != bob.size()) {
            throw ParameterError("Alice and Bob traces differ in length");
        }
        if (cfg.recovery_mode == RecoveryMode::LLM && transport == nullptr) {
            throw ConfigError("LLM recovery needs a chat transport");
        }
        const SessionSeeds seeds = SessionSeeds::derive(cfg.session_seed);

        auto [probed_a, probed_b] = clock.run("probe", [&] {
            return std::pair{skip_probe(alice, cfg.alpha, seeds.probe),
                             skip_probe(bob, cfg.alpha, seeds.probe)};
        });
        auto [norm_a, norm_b] = clock.run("normalize", [&] {
            return std::pair{rescale_truncate(probed_a), rescale_truncate(probed_b)};
        });

        auto recover = [&](const NormalizedTrace& norm, Party party) {
            if (cfg.recovery_mode == RecoveryMode::Interpolation) return recover_interpolate(norm);
            RecoveryRequest req{norm, party, cfg.context_note, std::string(kDefaultInstruction)};
            return recover_llm(req, cfg.llm, *transport);
        };
        auto [rec_a, rec_b] = clock.run("recover", [&] {
            return std::pair{recover(norm_a, Party::Alice), recover(norm_b, Party::Bob)};
        });
        report.recovery_source_alice = to_string(rec_a.source);
        report.recovery_source_bob = to_string(rec_b.source);
        report.recovery_attempts_alice = rec_a.attempts;
        report.recovery_attempts_bob = rec_b.attempts;

        clock.run("evaluate", [&] {
            report.mse_alice = mse(rec_a, normalize_full(alice));
            report.mse_bob = mse(rec_b, normalize_full(bob));
            return 0;
        });

        auto [ops_a, ops_b] = clock.run("operators", [&] {
            return std::pair{build_operators(cfg.sensing, rec_a.values, Party::Alice),
                             build_operators(cfg.sensing, rec_b.values, Party::Bob)};
        });

        const KeyBits key_a = clock.run("compress", [&] {
            return generate_key(static_cast<std::size_t>(cfg.sensing.key_len), seeds.key);
        });
        const Syndrome syn = clock.run("compress", [&] { return alice_round(key_a, ops_a); });
        const Syndrome syn_rx = clock.run("transmit", [&] {
            return channel_transmit(syn, cfg.syndrome_noise_sigma, seeds.noise);
        });

        Reconstruction rec = clock.run("reconstruct", [&] {
            return bob_reconstruct(syn_rx, ops_b, cfg.solver);
        });
        report.solver_iters.push_back(rec.solve.iters);
        report.solver_converged.push_back(rec.solve.converged);

        KeyBits key_b = std::move(rec.key);
        for (std::size_t pos : cfg.inject_flips) key_b.flip(pos);
        report.key_errors_before_correction =
            static_cast<int>(std::lround((1.0 - kar(key_a, key_b)) * static_cast<double>(key_a.size())));

        if (cfg.correction_enabled) {
            Correction corr = clock.run("correct", [&] {
                return bob_correct(key_b, syn_rx.syn2, ops_b, cfg.solver);
            });
            report.solver_iters.push_back(corr.solve.iters);
            report.solver_converged.push_back(corr.solve.converged);
            for (int t : corr.mismatch) report.bits_flipped_by_correction += t != 0;
            key_b = std::move(corr.key);
        }

        clock.run("amplify", [&] {
            report.alice_digest_hex = to_hex(privacy_amplify(key_a));
            report.digest_hex = to_hex(privacy_amplify(key_b));
            return 0;
        });
        report.kar = kar(key_a, key_b);
        report.key_match = key_a == key_b;
    } catch (const std::exception& e) {
        report.failed_stage = clock.current();
        report.error = e.what();
        report.kar = 0.0;
        report.key_match = false;
    }
    return report;
}

}  // namespace llmkey
