#include "nrsim/rng.hpp"

namespace nrsim {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t fnv1a64(std::string_view data, std::uint64_t h) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

RngStream::RngStream(std::uint64_t seed, std::string_view purpose, std::uint64_t entity)
    : key_(mix64(mix64(seed ^ fnv1a64(purpose)) + kGolden * (entity + 1))) {}

std::uint64_t RngStream::next_u64() { return mix64(key_ + kGolden * ++counter_); }

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

}  // namespace nrsim
