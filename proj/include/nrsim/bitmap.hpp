#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nrsim {

/// Fixed-width RBG bitmap: bit m set means RBG m carries the transmission.
///
/// Hex form is MSB-first: RBG 0 is the most significant bit of the first
/// hex digit, padded with zero bits to a whole digit ({0,1} of 4 -> "c").
class RbgBitmap {
 public:
  RbgBitmap() = default;
  explicit RbgBitmap(int width);

  static RbgBitmap all_ones(int width);
  /// Contiguous block of `count` RBGs starting at `first`.
  static RbgBitmap block(int width, int first, int count);
  static RbgBitmap from_hex(std::string_view hex, int width);

  int width() const noexcept { return width_; }
  bool test(int m) const;
  void set(int m, bool value = true);
  int count() const;
  bool none() const { return count() == 0; }
  bool intersects(const RbgBitmap& other) const;
  std::string to_hex() const;
  /// Bit string, RBG 0 first ("1100").
  std::string to_string() const;

  friend bool operator==(const RbgBitmap&, const RbgBitmap&) = default;

 private:
  int width_ = 0;
  std::vector<std::uint64_t> words_;
};

}  // namespace nrsim
