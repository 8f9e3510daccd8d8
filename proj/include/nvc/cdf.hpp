#pragma once

#include "nvc/range_coder.hpp"

// Discretized Gaussian tables and the per-element symbol coder shared by the
// latent, hyper-latent and flow segments.

namespace nvc::entropy {

inline constexpr int kSymbolMin = -256;
inline constexpr int kSymbolMax = 256;
inline constexpr double kSigmaMin = 0.11;

double normal_cdf(double t);

// P(symbol) = Phi((symbol + 1/2 - mu)/sigma) - Phi((symbol - 1/2 - mu)/sigma),
// evaluated on |symbol - mu| so both terms use the accurate lower tail.
double gaussian_mass(double symbol, double mu, double sigma);

// Full table over [smin, smax]; tail mass beyond the ends is folded into the
// end symbols. Throws on smin >= smax.
CdfTable build_cdf_table(double mu, double sigma, int smin, int smax);

// Coding of one symbol in [kSymbolMin, kSymbolMax] under N(mu, sigma) * U.
//
// A table is built over a window of symbols around round(mu) of half-width
// min(256, 2 + ceil(8 sigma)), plus one escape entry carrying the mass outside
// the window. Escaped values follow under a uniform table over the full
// symbol range. Values outside the symbol range are clamped by the caller.
struct WindowedGaussian {
  int lo = 0;
  int hi = 0;
  CdfTable table;  // indices 0 .. hi-lo are symbols, hi-lo+1 is the escape

  WindowedGaussian(double mu, double sigma);
  int escape_index() const { return hi - lo + 1; }
  // Ideal code length in bits of `symbol` under the quantized tables.
  double code_length(int symbol) const;
};

const CdfTable& uniform_escape_table();

void encode_gaussian(RangeEncoder& enc, int symbol, double mu, double sigma);
int decode_gaussian(RangeDecoder& dec, double mu, double sigma);

int clamp_symbol(double value);

}  // namespace nvc::entropy
