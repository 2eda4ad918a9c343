#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace llmkey {

/// SplitMix64 finalizer. Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// FNV-1a over the bytes of a tag, for naming independent RNG streams.
std::uint64_t tag_hash(std::string_view tag) noexcept;

/// Folds a base seed with any number of integers into a new seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) noexcept;

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) noexcept {
    return derive_seed(base, {tag_hash(tag)});
}

}  // namespace llmkey
