#include "nvc/range_coder.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "nvc/error.hpp"

namespace nvc::entropy {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

void CdfTable::validate() const {
  if (cdf.size() < 2) throw Error("cdf table needs at least one symbol");
  if (cdf.front() != 0 || cdf.back() != kTotal) throw Error("cdf table endpoints must be 0 and 2^16");
  for (std::size_t i = 1; i < cdf.size(); ++i) {
    if (cdf[i] <= cdf[i - 1]) throw Error("cdf table has a zero-frequency symbol at index " + std::to_string(i - 1));
  }
}

CdfTable quantize_pmf(std::span<const double> probs, int offset) {
  const std::size_t n = probs.size();
  if (n == 0 || n > kTotal) throw Error("quantize_pmf: alphabet size " + std::to_string(n) + " not in [1, 2^16]");
  double total = 0;
  for (double p : probs) {
    if (!(p >= 0)) throw Error("quantize_pmf: negative or NaN probability");
    total += p;
  }
  std::vector<double> scaled(n);
  const double spare = static_cast<double>(kTotal - n);
  std::vector<std::uint32_t> freq(n);
  std::uint64_t used = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double p = total > 0 ? probs[i] / total : 1.0 / static_cast<double>(n);
    scaled[i] = p * spare;
    const double fl = std::floor(scaled[i]);
    freq[i] = 1 + static_cast<std::uint32_t>(fl);
    scaled[i] -= fl;
    used += freq[i];
  }
  // used <= 2^16 since sum(floor) <= spare; hand out what is left.
  std::int64_t left = static_cast<std::int64_t>(kTotal) - static_cast<std::int64_t>(used);
  if (left > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scaled[a] > scaled[b]; });
    for (std::size_t k = 0; left > 0; k = (k + 1) % n, --left) ++freq[order[k]];
  }
  CdfTable t;
  t.offset = offset;
  t.cdf.resize(n + 1);
  t.cdf[0] = 0;
  for (std::size_t i = 0; i < n; ++i) t.cdf[i + 1] = t.cdf[i] + freq[i];
  return t;
}

void RangeEncoder::encode_raw(std::uint32_t cum, std::uint32_t freq) {
  const std::uint32_t r = range_ >> kPrecisionBits;
  low_ += static_cast<std::uint64_t>(r) * cum;
  range_ = r * freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode(const CdfTable& table, int index) {
  if (index < 0 || index >= table.size()) {
    throw Error("range_encode: index " + std::to_string(index) + " outside table of " + std::to_string(table.size()) +
                " symbols");
  }
  encode_raw(table.cdf[index], table.freq(index));
}

void RangeEncoder::encode_symbol(const CdfTable& table, int symbol) {
  if (symbol < table.symbol_min() || symbol > table.symbol_max()) {
    throw Error("range_encode: symbol " + std::to_string(symbol) + " outside table range [" +
                std::to_string(table.symbol_min()) + ", " + std::to_string(table.symbol_max()) + "]");
  }
  encode(table, symbol - table.offset);
}

void RangeEncoder::shift_low() {
  if (static_cast<std::uint32_t>(low_) < 0xFF000000u || (low_ >> 32) != 0) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      if (leading_) {
        leading_ = false;
      } else {
        out_.push_back(static_cast<std::uint8_t>(temp + carry));
      }
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFu) << 8;
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  std::vector<std::uint8_t> out = std::move(out_);
  *this = RangeEncoder();
  return out;
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> payload) : in_(payload) {
  if (in_.size() < 4) throw DataError("truncated range-coder stream: fewer than 4 bytes", in_.size());
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= in_.size()) throw DataError("truncated range-coder stream", pos_);
  return in_[pos_++];
}

int RangeDecoder::decode(const CdfTable& table) {
  const std::uint32_t r = range_ >> kPrecisionBits;
  const std::uint32_t v = code_ / r;
  if (v >= kTotal) throw DataError("corrupt range-coder stream", pos_);
  // Last index with cdf[index] <= v.
  const auto it = std::upper_bound(table.cdf.begin() + 1, table.cdf.end(), v);
  const int index = static_cast<int>(it - table.cdf.begin()) - 1;
  code_ -= r * table.cdf[index];
  range_ = r * table.freq(index);
  while (range_ < kTop) {
    range_ <<= 8;
    code_ = (code_ << 8) | next_byte();
  }
  return index;
}

void RangeDecoder::finish() const {
  if (pos_ != in_.size()) {
    throw DataError("range-coder stream has " + std::to_string(in_.size() - pos_) + " unread bytes", pos_);
  }
  if (code_ != 0) throw DataError("range-coder stream does not terminate cleanly", pos_);
}

}  // namespace nvc::entropy
