#include "llmkey/key_bits.hpp"

#include <array>

#include "llmkey/digest.hpp"
#include "llmkey/errors.hpp"

namespace llmkey {

KeyBits::KeyBits(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i] > 1) {
            throw ParameterError("key element " + std::to_string(i) + " is not a bit");
        }
    }
}

void KeyBits::flip(std::size_t i) {
    if (i >= bits_.size()) throw ParameterError("bit index out of range");
    bits_[i] ^= 1;
}

Eigen::VectorXd KeyBits::to_real() const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(bits_.size()));
    for (std::size_t i = 0; i < bits_.size(); ++i) v[static_cast<Eigen::Index>(i)] = bits_[i];
    return v;
}

std::vector<std::uint8_t> KeyBits::pack() const {
    std::vector<std::uint8_t> out((bits_.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        if (bits_[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    }
    return out;
}

std::string KeyBits::to_string() const {
    std::string s;
    s.reserve(bits_.size());
    for (auto b : bits_) s.push_back(b ? '1' : '0');
    return s;
}

KeyBits generate_key(std::size_t n, std::uint64_t seed) {
    std::vector<std::uint8_t> bits;
    bits.reserve(n);
    std::array<std::uint8_t, 17> block{};
    for (int i = 0; i < 8; ++i) block[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    block[16] = 'K';
    for (std::uint64_t counter = 0; bits.size() < n; ++counter) {
        for (int i = 0; i < 8; ++i) block[8 + i] = static_cast<std::uint8_t>(counter >> (8 * i));
        const Sha256Digest d = sha256(block);
        for (std::size_t j = 0; j < d.size() * 8 && bits.size() < n; ++j) {
            bits.push_back((d[j / 8] >> (7 - j % 8)) & 1u);
        }
    }
    return KeyBits(std::move(bits));
}

}  // namespace llmkey
