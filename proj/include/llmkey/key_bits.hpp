#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace llmkey {

/// A binary key; every element is 0 or 1.
class KeyBits {
public:
    KeyBits() = default;
    explicit KeyBits(std::vector<std::uint8_t> bits);

    static KeyBits zeros(std::size_t n) { return KeyBits(std::vector<std::uint8_t>(n, 0)); }

    std::size_t size() const noexcept { return bits_.size(); }
    std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
    const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

    void flip(std::size_t i);

    Eigen::VectorXd to_real() const;
    /// Big-endian bit packing into ceil(N / 8) bytes.
    std::vector<std::uint8_t> pack() const;
    std::string to_string() const;

    friend bool operator==(const KeyBits&, const KeyBits&) = default;

private:
    std::vector<std::uint8_t> bits_;
};

/// N key bits from a SHA-256 counter-mode generator keyed by `seed`.
KeyBits generate_key(std::size_t n, std::uint64_t seed);

}  // namespace llmkey
