#include "nsmfm/rng.hpp"

namespace nsmfm {

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_label(std::string_view label) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (const char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t substream_seed(std::uint64_t master, std::string_view label) noexcept {
  return mix64(mix64(master) ^ hash_label(label));
}

std::uint64_t combine_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts) noexcept {
  std::uint64_t h = mix64(master);
  for (const std::uint64_t part : parts) h = mix64(h ^ mix64(part + 0x632BE59BD9B4E019ULL));
  return h;
}

}  // namespace nsmfm
