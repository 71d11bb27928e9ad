#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace nsmfm {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// FNV-1a over the bytes of a label.
std::uint64_t hash_label(std::string_view label) noexcept;

// Seed for a named sub-stream of a master seed. Streams with different
// labels are independent for all practical purposes.
std::uint64_t substream_seed(std::uint64_t master, std::string_view label) noexcept;

// Order-sensitive combination of a master seed with integer coordinates.
std::uint64_t combine_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) noexcept;

// Sub-stream labels used by the data-generating process.
namespace stream {
inline constexpr std::string_view kLoadings = "dgp/loadings";
inline constexpr std::string_view kTrend = "dgp/trend-innovations";
inline constexpr std::string_view kStationary = "dgp/stationary-factors";
inline constexpr std::string_view kNoise = "dgp/idiosyncratic";
}  // namespace stream

}  // namespace nsmfm
