#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "llmkey/channel_model.hpp"
#include "llmkey/key_bits.hpp"

namespace llmkey {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr std::string_view kKeyStreamTag = "sensing/key";
inline constexpr std::string_view kCheckStreamTag = "sensing/check";

struct SensingConfig {
    int key_len = 128;
    int zero_gap = 4;
    /// Rows of the key operator; ceil(0.6 * L) when unset.
    std::optional<int> m_key;
    /// Rows of the check operator; ceil(0.5 * N) when unset.
    std::optional<int> m_chk;
    double theta = 100.0;
    std::uint64_t a0_seed = 0x4c4c4d4b6579ULL;

    /// L = N + s * (N - 1).
    int sparse_len() const noexcept { return key_len + zero_gap * (key_len - 1); }
    int rows_key() const;
    int rows_chk() const;

    /// Throws ConfigError.
    void validate() const;
};

/// One party's perturbed operators A = A0 (I + E), with E circulant.
struct PerturbedOperators {
    Party party = Party::Alice;
    int zero_gap = 4;
    Matrix a_key;  // M1 x L
    Matrix a_chk;  // M2 x N
    Matrix e_key;  // L x L
    Matrix e_chk;  // N x N
};

struct Syndrome {
    Vector syn1;
    Vector syn2;
};

/// I.i.d. N(0, 1/rows) entries determined by (seed, stream_tag, rows, cols).
Matrix default_operator(int rows, int cols, std::uint64_t seed, std::string_view stream_tag);

/// d x d matrix with entry (i, j) = r[(i - j) mod d]: column 0 is r and each
/// row is the previous one shifted right by one.
Matrix circulant(std::span<const double> r);

/// Tiles `recovered` cyclically to length d and scales it by 1/theta.
Vector perturbation_vector(std::span<const double> recovered, int d, double theta);

PerturbedOperators build_operators(const SensingConfig& cfg, std::span<const double> recovered,
                                   Party party);

/// Bit i lands at position i * (gap + 1); length N + gap * (N - 1).
Vector sparsify(const KeyBits& key, int gap);

/// Reads positions 0, gap+1, 2(gap+1), ... Throws DimensionError when the
/// length is not N + gap * (N - 1) for any N >= 1.
Vector desparsify(const Vector& v, int gap);

Syndrome compress(const KeyBits& key, const PerturbedOperators& ops);

/// Binary wire form: magic "LKSY", u32 version, u32 M1, u32 M2 (all
/// little-endian), then M1 + M2 little-endian IEEE-754 doubles.
inline constexpr std::uint32_t kSyndromeVersion = 1;
std::vector<std::uint8_t> encode_syndrome(const Syndrome& syn);
Syndrome decode_syndrome(std::span<const std::uint8_t> bytes);

/// `{"version":1,"m1":...,"m2":...,"syn1":[...],"syn2":[...]}`
std::string syndrome_to_json(const Syndrome& syn);
Syndrome syndrome_from_json(const std::string& text);

}  // namespace llmkey
