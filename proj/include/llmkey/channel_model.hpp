#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace llmkey {

enum class Party { Alice, Bob };

std::string_view to_string(Party party) noexcept;

/// One party's measurement sequence (arRSSI-like reals).
///
/// Always holds at least two finite values.
class ChannelTrace {
public:
    ChannelTrace(Party party, std::vector<double> values);

    Party party() const noexcept { return party_; }
    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    Party party_;
    std::vector<double> values_;
};

/// A trace after skipped probing. `mask[i]` is true exactly when `values[i]`
/// holds a measurement.
struct ProbedTrace {
    Party party = Party::Alice;
    std::vector<std::optional<double>> values;
    std::vector<bool> mask;
    double alpha = 1.0;
    std::size_t n_probed = 0;

    std::size_t size() const noexcept { return values.size(); }
};

/// Present values are in [0, 1] with two decimal digits. `s_min` and `s_max`
/// are the pre-scaling extremes over the present values.
struct NormalizedTrace {
    Party party = Party::Alice;
    std::vector<std::optional<double>> values;
    double s_min = 0.0;
    double s_max = 1.0;

    std::size_t size() const noexcept { return values.size(); }
    std::size_t present_count() const noexcept;
    bool complete() const noexcept { return present_count() == size(); }
    /// All values, requiring every position to be present.
    std::vector<double> dense() const;
};

struct SyntheticChannelConfig {
    std::size_t n_total = 256;
    double rho = 0.95;
    double measurement_noise_sigma = 0.02;
    double smoothness_halflife = 20.0;
    std::uint64_t rng_seed = 1;

    /// Throws ConfigError.
    void validate() const;
};

/// Alice and Bob traces sharing an AR(1) latent process.
///
/// The latent has unit stationary variance and the given half-life. Each
/// party adds independent Gaussian noise of total variance (1 - rho) / rho,
/// so the Pearson correlation of the pair tends to rho. The measurement
/// noise sigma is a floor on that independent noise: when sigma^2 exceeds
/// the budget the pair is less correlated than rho. Values are reported on
/// a dB-like scale.
std::pair<ChannelTrace, ChannelTrace> generate_trace_pair(const SyntheticChannelConfig& cfg);

/// Reads `index,value` rows (optional header) with strictly increasing indices.
ChannelTrace ingest_trace_csv(const std::filesystem::path& path, Party party);
void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& values);
void write_mask_csv(const std::filesystem::path& path, const ProbedTrace& probed);

/// floor(alpha * n_total), guarded against representation error in alpha.
std::size_t probed_count(double alpha, std::size_t n_total);

/// Keeps floor(alpha * n) positions drawn uniformly without replacement.
/// The mask depends only on (seed, alpha, n), so both parties skip the same
/// instants when they share the seed.
ProbedTrace skip_probe(const ChannelTrace& trace, double alpha, std::uint64_t rng_seed);

/// Min-max rescales present values to [0, 1] and truncates to two decimals.
NormalizedTrace rescale_truncate(const ProbedTrace& probed);

/// rescale_truncate of the fully probed trace.
NormalizedTrace normalize_full(const ChannelTrace& trace);

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace llmkey
