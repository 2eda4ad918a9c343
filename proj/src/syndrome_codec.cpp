#include <array>
#include <bit>
#include <cmath>
#include <cstring>

#include <json.hpp>

#include "llmkey/errors.hpp"
#include "llmkey/sensing.hpp"

namespace llmkey {

namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'L', 'K', 'S', 'Y'};
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
    return v;
}

double get_f64(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
    return std::bit_cast<double>(v);
}

void require_finite(const Vector& v, const char* name) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw ParseError(std::string(name) + " has a non-finite entry");
    }
}

}  // namespace

std::vector<std::uint8_t> encode_syndrome(const Syndrome& syn) {
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderSize + 8 * static_cast<std::size_t>(syn.syn1.size() + syn.syn2.size()));
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_u32(out, kSyndromeVersion);
    put_u32(out, static_cast<std::uint32_t>(syn.syn1.size()));
    put_u32(out, static_cast<std::uint32_t>(syn.syn2.size()));
    for (double v : syn.syn1) put_f64(out, v);
    for (double v : syn.syn2) put_f64(out, v);
    return out;
}

Syndrome decode_syndrome(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kHeaderSize) throw ParseError("syndrome shorter than its header");
    if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
        throw ParseError("bad syndrome magic");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kSyndromeVersion) {
        throw ParseError("unsupported syndrome version " + std::to_string(version));
    }
    const std::size_t m1 = get_u32(bytes, 8);
    const std::size_t m2 = get_u32(bytes, 12);
    if (bytes.size() != kHeaderSize + 8 * (m1 + m2)) {
        throw ParseError("syndrome payload size does not match its header");
    }
    Syndrome syn{Vector(static_cast<Eigen::Index>(m1)), Vector(static_cast<Eigen::Index>(m2))};
    std::size_t at = kHeaderSize;
    for (std::size_t i = 0; i < m1; ++i, at += 8) syn.syn1[static_cast<Eigen::Index>(i)] = get_f64(bytes, at);
    for (std::size_t i = 0; i < m2; ++i, at += 8) syn.syn2[static_cast<Eigen::Index>(i)] = get_f64(bytes, at);
    require_finite(syn.syn1, "syn1");
    require_finite(syn.syn2, "syn2");
    return syn;
}

std::string syndrome_to_json(const Syndrome& syn) {
    nlohmann::json j;
    j["version"] = kSyndromeVersion;
    j["m1"] = syn.syn1.size();
    j["m2"] = syn.syn2.size();
    j["syn1"] = std::vector<double>(syn.syn1.begin(), syn.syn1.end());
    j["syn2"] = std::vector<double>(syn.syn2.begin(), syn.syn2.end());
    return j.dump();
}

Syndrome syndrome_from_json(const std::string& text) {
    try {
        const auto j = nlohmann::json::parse(text);
        const auto s1 = j.at("syn1").get<std::vector<double>>();
        const auto s2 = j.at("syn2").get<std::vector<double>>();
        Syndrome syn{Eigen::Map<const Vector>(s1.data(), static_cast<Eigen::Index>(s1.size())),
                     Eigen::Map<const Vector>(s2.data(), static_cast<Eigen::Index>(s2.size()))};
        require_finite(syn.syn1, "syn1");
        require_finite(syn.syn2, "syn2");
        return syn;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad syndrome json: ") + e.what());
    }
}

}  // namespace llmkey
