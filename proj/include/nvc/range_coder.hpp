#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Byte-oriented range coder over 16-bit cumulative frequency tables.
//
// The state is a 64-bit `low` and 32-bit `range` with carry propagation through
// a cached byte (the scheme used by LZMA). Stream layout is documented in
// docs/bitstream.md.

namespace nvc::entropy {

inline constexpr int kPrecisionBits = 16;
inline constexpr std::uint32_t kTotal = 1u << kPrecisionBits;

// Quantized CDF over the integer symbols offset, offset + 1, ..., offset + size - 1.
// cdf has size + 1 entries, cdf[0] = 0, cdf[size] = 2^16, strictly increasing.
struct CdfTable {
  int offset = 0;
  std::vector<std::uint32_t> cdf;

  int size() const { return static_cast<int>(cdf.size()) - 1; }
  int symbol_min() const { return offset; }
  int symbol_max() const { return offset + size() - 1; }
  std::uint32_t freq(int index) const { return cdf[index + 1] - cdf[index]; }
  double probability(int symbol) const { return freq(symbol - offset) / static_cast<double>(kTotal); }

  // Throws if any invariant is violated.
  void validate() const;
};

// Quantizes a probability vector to a CdfTable: freq = 1 + floor(p * (2^16 - n)),
// leftover units go to the largest fractional parts (ties to the lower index).
// Probabilities need not be normalized; they are rescaled first.
CdfTable quantize_pmf(std::span<const double> probs, int offset);

class RangeEncoder {
 public:
  // Codes table index `index` (0-based).
  void encode(const CdfTable& table, int index);
  // Codes the symbol value (index = symbol - offset); throws if out of range.
  void encode_symbol(const CdfTable& table, int symbol);
  void encode_raw(std::uint32_t cum, std::uint32_t freq);

  // Flushes and returns the payload. The encoder is left empty.
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  bool leading_ = true;  // the first cached byte is always zero and is not stored
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  // Reads the 4-byte preamble. An empty symbol stream is exactly 4 bytes.
  explicit RangeDecoder(std::span<const std::uint8_t> payload);

  int decode(const CdfTable& table);  // returns the table index
  int decode_symbol(const CdfTable& table) { return table.offset + decode(table); }

  // Verifies the stream was consumed exactly; throws DataError otherwise.
  void finish() const;

  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

}  // namespace nvc::entropy
