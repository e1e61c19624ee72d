#pragma once

#include <cstdint>
#include <string_view>

namespace nrsim {

/// Counter-based random stream keyed by (seed, purpose, entity).
///
/// Draw i of a stream depends only on its key and i, so creating or consuming
/// one stream never shifts the values seen by another.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view purpose, std::uint64_t entity);

  std::uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t position() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 1469598103934665603ULL);

}  // namespace nrsim
