#include "llmkey/sensing.hpp"

#include <cmath>
#include <random>

#include "llmkey/errors.hpp"
#include "llmkey/seeds.hpp"

namespace llmkey {

int SensingConfig::rows_key() const {
    return m_key ? *m_key : static_cast<int>(std::ceil(0.6 * sparse_len()));
}

int SensingConfig::rows_chk() const {
    return m_chk ? *m_chk : static_cast<int>(std::ceil(0.5 * key_len));
}

void SensingConfig::validate() const {
    if (key_len < 8) throw ConfigError("key_len must be at least 8");
    if (zero_gap < 0) throw ConfigError("zero_gap must be nonnegative");
    const int l = sparse_len();
    if (rows_key() <= 0 || rows_key() > l) {
        throw ConfigError("m_key must lie in [1, " + std::to_string(l) + "]");
    }
    if (rows_chk() <= 0 || rows_chk() > key_len) {
        throw ConfigError("m_chk must lie in [1, " + std::to_string(key_len) + "]");
    }
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be positive");
}

Matrix default_operator(int rows, int cols, std::uint64_t seed, std::string_view stream_tag) {
    if (rows <= 0 || cols <= 0) throw ParameterError("operator dimensions must be positive");
    std::mt19937_64 rng(derive_seed(seed, {tag_hash(stream_tag), static_cast<std::uint64_t>(rows),
                                           static_cast<std::uint64_t>(cols)}));
    std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(static_cast<double>(rows)));
    Matrix a(rows, cols);
    // Row-major fill order so the stream does not depend on Eigen's storage.
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) a(i, j) = gauss(rng);
    }
    return a;
}

Matrix circulant(std::span<const double> r) {
    if (r.empty()) throw ParameterError("circulant needs a nonempty vector");
    const auto d = static_cast<Eigen::Index>(r.size());
    Matrix c(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) c(i, j) = r[static_cast<std::size_t>((i - j + d) % d)];
    }
    return c;
}

Vector perturbation_vector(std::span<const double> recovered, int d, double theta) {
    if (recovered.empty()) throw ParameterError("perturbation needs a nonempty recovered trace");
    if (d <= 0) throw ParameterError("perturbation length must be positive");
    if (!(theta > 0.0)) throw ParameterError("theta must be positive");
    Vector v(d);
    for (int i = 0; i < d; ++i) v[i] = recovered[static_cast<std::size_t>(i) % recovered.size()] / theta;
    return v;
}

PerturbedOperators build_operators(const SensingConfig& cfg, std::span<const double> recovered,
                                   Party party) {
    cfg.validate();
    const int n = cfg.key_len;
    const int l = cfg.sparse_len();

    PerturbedOperators ops;
    ops.party = party;
    ops.zero_gap = cfg.zero_gap;

    const Vector r_key = perturbation_vector(recovered, l, cfg.theta);
    const Vector r_chk = perturbation_vector(recovered, n, cfg.theta);
    ops.e_key = circulant(std::span<const double>(r_key.data(), r_key.size()));
    ops.e_chk = circulant(std::span<const double>(r_chk.data(), r_chk.size()));

    const Matrix a0_key = default_operator(cfg.rows_key(), l, cfg.a0_seed, kKeyStreamTag);
    const Matrix a0_chk = default_operator(cfg.rows_chk(), n, cfg.a0_seed, kCheckStreamTag);
    ops.a_key = a0_key + a0_key * ops.e_key;
    ops.a_chk = a0_chk + a0_chk * ops.e_chk;
    return ops;
}

Vector sparsify(const KeyBits& key, int gap) {
    if (gap < 0) throw ParameterError("zero gap must be nonnegative");
    const auto n = static_cast<Eigen::Index>(key.size());
    if (n == 0) return Vector(0);
    Vector v = Vector::Zero(n + gap * (n - 1));
    for (Eigen::Index i = 0; i < n; ++i) v[i * (gap + 1)] = key[static_cast<std::size_t>(i)];
    return v;
}

Vector desparsify(const Vector& v, int gap) {
    if (gap < 0) throw ParameterError("zero gap must be nonnegative");
    const Eigen::Index len = v.size();
    // len = n + gap * (n - 1)  <=>  len + gap = n * (gap + 1)
    if (len < 1 || (len + gap) % (gap + 1) != 0) {
        throw DimensionError("length " + std::to_string(len) + " is not a sparse key length for gap " +
                             std::to_string(gap));
    }
    const Eigen::Index n = (len + gap) / (gap + 1);
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) out[i] = v[i * (gap + 1)];
    return out;
}

Syndrome compress(const KeyBits& key, const PerturbedOperators& ops) {
    const Vector ks = sparsify(key, ops.zero_gap);
    if (ops.a_key.cols() != ks.size() || ops.a_chk.cols() != static_cast<Eigen::Index>(key.size())) {
        throw DimensionError("key length " + std::to_string(key.size()) +
                             " does not match the sensing operators");
    }
    return Syndrome{ops.a_key * ks, ops.a_chk * key.to_real()};
}

}  // namespace llmkey
