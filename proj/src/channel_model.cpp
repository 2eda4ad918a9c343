#include "llmkey/channel_model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "llmkey/errors.hpp"
#include "llmkey/seeds.hpp"

namespace llmkey {

namespace {

// Absorbs representation error such as 0.29 * 100 == 28.999999999999996
// before a floor.
constexpr double kFloorGuard = 1e-9;

constexpr double kBaseLevelDb = -70.0;
constexpr double kLatentScaleDb = 5.0;

std::string trim(std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

}  // namespace

std::string_view to_string(Party party) noexcept {
    return party == Party::Alice ? "alice" : "bob";
}

ChannelTrace::ChannelTrace(Party party, std::vector<double> values)
    : party_(party), values_(std::move(values)) {
    if (values_.size() < 2) {
        throw ParameterError("channel trace needs at least 2 values, got " +
                             std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw ParameterError("channel trace value at index " + std::to_string(i) +
                                 " is not finite");
        }
    }
}

std::size_t NormalizedTrace::present_count() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(values.begin(), values.end(), [](const auto& v) { return v.has_value(); }));
}

std::vector<double> NormalizedTrace::dense() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!values[i]) {
            throw ParameterError("normalized trace has no value at index " + std::to_string(i));
        }
        out.push_back(*values[i]);
    }
    return out;
}

void SyntheticChannelConfig::validate() const {
    if (n_total < 2) throw ConfigError("n_total must be at least 2");
    if (!(rho >= 0.0 && rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
    if (!(measurement_noise_sigma >= 0.0)) {
        throw ConfigError("measurement_noise_sigma must be nonnegative");
    }
    if (!(smoothness_halflife > 0.0)) throw ConfigError("smoothness_halflife must be positive");
}

std::pair<ChannelTrace, ChannelTrace> generate_trace_pair(const SyntheticChannelConfig& cfg) {
    cfg.validate();
    const std::size_t n = cfg.n_total;

    const double phi = std::pow(0.5, 1.0 / cfg.smoothness_halflife);
    const double innovation_sd = std::sqrt(1.0 - phi * phi);

    std::mt19937_64 latent_rng(derive_seed(cfg.rng_seed, "latent"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> latent(n);
    latent[0] = gauss(latent_rng);
    for (std::size_t i = 1; i < n; ++i) {
        latent[i] = phi * latent[i - 1] + innovation_sd * gauss(latent_rng);
    }

    // rho == 0 has no finite budget; the latent is then fully masked.
    const double budget = cfg.rho > 0.0 ? (1.0 - cfg.rho) / cfg.rho : 1e6;
    const double measurement_var = cfg.measurement_noise_sigma * cfg.measurement_noise_sigma;
    const double noise_sd = std::sqrt(std::max(budget, measurement_var));

    auto observe = [&](Party party) {
        std::mt19937_64 rng(derive_seed(cfg.rng_seed, to_string(party)));
        std::normal_distribution<double> noise(0.0, 1.0);
        std::vector<double> values(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double eps = noise_sd > 0.0 ? noise_sd * noise(rng) : 0.0;
            values[i] = kBaseLevelDb + kLatentScaleDb * (latent[i] + eps);
        }
        return ChannelTrace(party, std::move(values));
    };
    return {observe(Party::Alice), observe(Party::Bob)};
}

ChannelTrace ingest_trace_csv(const std::filesystem::path& path, Party party) {
    std::ifstream in(path);
    if (!in) throw IngestError("cannot open trace file " + path.string());

    std::vector<double> values;
    std::optional<long long> last_index;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (line_no == 1 && line == "index,value") continue;

        const auto comma = line.find(',');
        const std::string where = path.string() + ": line " + std::to_string(line_no);
        if (comma == std::string::npos) {
            throw IngestError(where + ": expected 'index,value', got '" + line + "'");
        }
        const std::string index_text = trim(line.substr(0, comma));
        const std::string value_text = trim(line.substr(comma + 1));
        const std::string row = where + " (row " + index_text + ")";

        long long index = 0;
        double value = 0.0;
        try {
            std::size_t used = 0;
            index = std::stoll(index_text, &used);
            if (used != index_text.size()) throw std::invalid_argument("index");
        } catch (const std::exception&) {
            throw IngestError(row + ": cannot parse index '" + index_text + "'");
        }
        try {
            std::size_t used = 0;
            value = std::stod(value_text, &used);
            if (used != value_text.size()) throw std::invalid_argument("value");
        } catch (const std::exception&) {
            throw IngestError(row + ": cannot parse value '" + value_text + "'");
        }
        if (!std::isfinite(value)) throw IngestError(row + ": value is not finite");
        if (last_index && index <= *last_index) {
            throw IngestError(row + ": indices must be strictly increasing");
        }
        last_index = index;
        values.push_back(value);
    }
    if (values.size() < 2) {
        throw IngestError(path.string() + ": a trace needs at least 2 rows, found " +
                          std::to_string(values.size()));
    }
    return ChannelTrace(party, std::move(values));
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<double>& values) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write trace file " + path.string());
    out << "index,value\n";
    out.precision(17);
    for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << values[i] << '\n';
    if (!out) throw IngestError("failed writing trace file " + path.string());
}

void write_mask_csv(const std::filesystem::path& path, const ProbedTrace& probed) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IngestError("cannot write mask file " + path.string());
    out << "index,probed\n";
    for (std::size_t i = 0; i < probed.mask.size(); ++i) {
        out << i << ',' << (probed.mask[i] ? 1 : 0) << '\n';
    }
}

std::size_t probed_count(double alpha, std::size_t n_total) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ParameterError("alpha must lie in (0, 1], got " + std::to_string(alpha));
    }
    const double scaled = alpha * static_cast<double>(n_total);
    return std::min(n_total, static_cast<std::size_t>(std::floor(scaled + kFloorGuard)));
}

ProbedTrace skip_probe(const ChannelTrace& trace, double alpha, std::uint64_t rng_seed) {
    const std::size_t n = trace.size();
    const std::size_t keep = probed_count(alpha, n);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(rng_seed, "probe-schedule"));
    // Partial Fisher-Yates: the first `keep` slots are a uniform sample.
    for (std::size_t i = 0; i < keep; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }

    ProbedTrace out;
    out.party = trace.party();
    out.alpha = alpha;
    out.n_probed = keep;
    out.mask.assign(n, false);
    out.values.assign(n, std::nullopt);
    for (std::size_t i = 0; i < keep; ++i) {
        out.mask[order[i]] = true;
        out.values[order[i]] = trace.values()[order[i]];
    }
    return out;
}

NormalizedTrace rescale_truncate(const ProbedTrace& probed) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::size_t present = 0;
    for (const auto& v : probed.values) {
        if (!v) continue;
        lo = std::min(lo, *v);
        hi = std::max(hi, *v);
        ++present;
    }
    if (present < 2) throw ParameterError("rescaling needs at least 2 present values");
    if (!(hi > lo)) {
        throw DegenerateRangeError("all present values are equal; the trace carries no range");
    }

    NormalizedTrace out;
    out.party = probed.party;
    out.s_min = lo;
    out.s_max = hi;
    out.values.reserve(probed.size());
    for (const auto& v : probed.values) {
        if (!v) {
            out.values.emplace_back(std::nullopt);
            continue;
        }
        const double scaled = (*v - lo) / (hi - lo);
        const double hundredths = std::floor(100.0 * scaled + kFloorGuard);
        out.values.emplace_back(std::clamp(hundredths, 0.0, 100.0) / 100.0);
    }
    return out;
}

NormalizedTrace normalize_full(const ChannelTrace& trace) {
    return rescale_truncate(skip_probe(trace, 1.0, 0));
}

double pearson_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw DimensionError("correlation needs two equal-length sequences of length >= 2");
    }
    const double n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    return sab / std::sqrt(saa * sbb);
}

}  // namespace llmkey
