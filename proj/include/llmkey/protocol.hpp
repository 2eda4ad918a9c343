#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmkey/channel_model.hpp"
#include "llmkey/key_bits.hpp"
#include "llmkey/recovery.hpp"
#include "llmkey/sensing.hpp"
#include "llmkey/solver.hpp"

namespace llmkey {

enum class RecoveryMode { LLM, Interpolation };

struct SessionConfig {
    SensingConfig sensing;
    SolverConfig solver;
    double syndrome_noise_sigma = 0.0;
    RecoveryMode recovery_mode = RecoveryMode::Interpolation;
    std::uint64_t session_seed = 1;
    double alpha = 0.7;
    std::string context_note{kDefaultContextNote};
    LlmEndpointConfig llm;
    /// Run Bob's syndrome-based correction after reconstruction.
    bool correction_enabled = true;
    /// Fault injection: positions of K_B' flipped before correction.
    std::vector<std::size_t> inject_flips;

    /// Throws ConfigError.
    void validate() const;
};

/// Public and private seeds of one session, all derived from session_seed.
struct SessionSeeds {
    std::uint64_t probe;  // shared in the clear
    std::uint64_t key;    // Alice only
    std::uint64_t noise;  // public-channel noise realization

    static SessionSeeds derive(std::uint64_t session_seed);
};

struct SessionReport {
    double kar = 0.0;
    bool key_match = false;
    double mse_alice = 0.0;
    double mse_bob = 0.0;
    std::string digest_hex;        // Bob's final key after amplification
    std::string alice_digest_hex;  // Alice's key after amplification
    std::map<std::string, double> timings_ms;
    std::vector<int> solver_iters;
    std::vector<bool> solver_converged;
    std::string recovery_source_alice;
    std::string recovery_source_bob;
    int recovery_attempts_alice = 0;
    int recovery_attempts_bob = 0;
    int bits_flipped_by_correction = 0;
    int key_errors_before_correction = 0;
    /// Set when a stage failed; the numeric fields are then meaningless.
    std::optional<std::string> failed_stage;
    std::optional<std::string> error;

    bool ok() const noexcept { return !failed_stage.has_value(); }
};

nlohmann::json to_json(const SessionReport& report);

struct Reconstruction {
    KeyBits key;
    SolveResult solve;
};

struct Correction {
    KeyBits key;
    std::vector<int> mismatch;
    SolveResult solve;
};

Syndrome alice_round(const KeyBits& key, const PerturbedOperators& ops_a);

/// Adds i.i.d. N(0, sigma^2) noise to every entry of both parts.
Syndrome channel_transmit(const Syndrome& syn, double sigma, std::uint64_t seed);

/// K_B' from the first syndrome part: solve, desparsify, round.
Reconstruction bob_reconstruct(const Syndrome& syn_rx, const PerturbedOperators& ops_b,
                               const SolverConfig& solver_cfg);

/// Recovers the sparse mismatch K_B' - K_A from the second syndrome part with
/// an l1 solve and flips K_B' wherever it rounds to a nonzero trit.
Correction bob_correct(const KeyBits& kb_prime, const Vector& syn2_rx,
                       const PerturbedOperators& ops_b, const SolverConfig& solver_cfg);

using KeyDigest = std::array<std::uint8_t, 16>;

/// First 128 bits of SHA-256 over the big-endian packed key.
KeyDigest privacy_amplify(const KeyBits& key);

/// Matching bits over total bits.
double kar(const KeyBits& a, const KeyBits& b);

/// Runs the whole pipeline for both parties. Stage failures are reported
/// through `failed_stage` rather than thrown. `transport` is required in
/// LLM recovery mode.
SessionReport run_session(const SessionConfig& cfg, const ChannelTrace& alice,
                          const ChannelTrace& bob, ChatTransport* transport = nullptr);

}  // namespace llmkey
