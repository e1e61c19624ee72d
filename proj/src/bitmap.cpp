#include "nrsim/bitmap.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace nrsim {

RbgBitmap::RbgBitmap(int width) : width_(width), words_((width + 63) / 64, 0) {
  if (width < 0) throw std::invalid_argument("negative bitmap width");
}

RbgBitmap RbgBitmap::all_ones(int width) { return block(width, 0, width); }

RbgBitmap RbgBitmap::block(int width, int first, int count) {
  RbgBitmap bm(width);
  for (int m = first; m < first + count; ++m) bm.set(m);
  return bm;
}

RbgBitmap RbgBitmap::from_hex(std::string_view hex, int width) {
  RbgBitmap bm(width);
  int bit = 0;
  for (char c : hex) {
    int v = 0;
    if (c >= '0' && c <= '9') v = c - '0';
    else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
    else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
    else throw std::invalid_argument("bad hex digit in bitmap");
    for (int b = 3; b >= 0; --b, ++bit) {
      if ((v >> b) & 1) {
        if (bit >= width) throw std::invalid_argument("bitmap hex wider than width");
        bm.set(bit);
      }
    }
  }
  return bm;
}

bool RbgBitmap::test(int m) const {
  if (m < 0 || m >= width_) throw std::out_of_range("RBG index");
  return (words_[m / 64] >> (m % 64)) & 1U;
}

void RbgBitmap::set(int m, bool value) {
  if (m < 0 || m >= width_) throw std::out_of_range("RBG index");
  const std::uint64_t mask = std::uint64_t{1} << (m % 64);
  if (value) words_[m / 64] |= mask;
  else words_[m / 64] &= ~mask;
}

int RbgBitmap::count() const {
  int n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

bool RbgBitmap::intersects(const RbgBitmap& other) const {
  const auto n = std::min(words_.size(), other.words_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (words_[i] & other.words_[i]) return true;
  }
  return false;
}

std::string RbgBitmap::to_hex() const {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  const int digits = (width_ + 3) / 4;
  out.reserve(digits);
  for (int d = 0; d < digits; ++d) {
    int v = 0;
    for (int b = 0; b < 4; ++b) {
      const int m = d * 4 + b;
      v = (v << 1) | ((m < width_ && test(m)) ? 1 : 0);
    }
    out.push_back(kDigits[v]);
  }
  return out;
}

std::string RbgBitmap::to_string() const {
  std::string out(width_, '0');
  for (int m = 0; m < width_; ++m) {
    if (test(m)) out[m] = '1';
  }
  return out;
}

}  // namespace nrsim
