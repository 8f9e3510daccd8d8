#include "nvc/cdf.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "nvc/error.hpp"

namespace nvc::entropy {

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }

double gaussian_mass(double symbol, double mu, double sigma) {
  const double v = std::abs(symbol - mu);
  return normal_cdf((0.5 - v) / sigma) - normal_cdf((-0.5 - v) / sigma);
}

namespace {

// Mass strictly below symbol s (i.e. of (-inf, s - 1/2)) and strictly above.
double mass_below(int s, double mu, double sigma) { return normal_cdf((s - 0.5 - mu) / sigma); }
double mass_above(int s, double mu, double sigma) { return normal_cdf((mu - s - 0.5) / sigma); }

void check_params(double mu, double sigma) {
  if (!std::isfinite(mu) || !std::isfinite(sigma) || sigma <= 0) {
    throw Error("gaussian table: invalid parameters mu=" + std::to_string(mu) + " sigma=" + std::to_string(sigma));
  }
}

}  // namespace

CdfTable build_cdf_table(double mu, double sigma, int smin, int smax) {
  if (smin >= smax) {
    throw Error("build_cdf_table: degenerate symbol range [" + std::to_string(smin) + ", " + std::to_string(smax) +
                "]");
  }
  check_params(mu, sigma);
  std::vector<double> p(static_cast<std::size_t>(smax - smin + 1));
  for (int s = smin; s <= smax; ++s) p[s - smin] = gaussian_mass(s, mu, sigma);
  p.front() += mass_below(smin, mu, sigma);
  p.back() += mass_above(smax, mu, sigma);
  return quantize_pmf(p, smin);
}

WindowedGaussian::WindowedGaussian(double mu, double sigma) {
  check_params(mu, sigma);
  const int half = static_cast<int>(std::min(256.0, 2.0 + std::ceil(8.0 * sigma)));
  const int center = static_cast<int>(std::clamp(std::round(mu), double(kSymbolMin), double(kSymbolMax)));
  lo = std::max(kSymbolMin, center - half);
  hi = std::min(kSymbolMax, center + half);
  std::vector<double> p(static_cast<std::size_t>(hi - lo + 2));
  for (int s = lo; s <= hi; ++s) p[s - lo] = gaussian_mass(s, mu, sigma);
  p.back() = mass_below(lo, mu, sigma) + mass_above(hi, mu, sigma);
  table = quantize_pmf(p, 0);
}

double WindowedGaussian::code_length(int symbol) const {
  const double total = kTotal;
  if (symbol >= lo && symbol <= hi) return -std::log2(table.freq(symbol - lo) / total);
  const CdfTable& u = uniform_escape_table();
  return -std::log2(table.freq(escape_index()) / total) - std::log2(u.freq(symbol - kSymbolMin) / total);
}

const CdfTable& uniform_escape_table() {
  static const CdfTable table = [] {
    std::vector<double> p(kSymbolMax - kSymbolMin + 1, 1.0);
    return quantize_pmf(p, kSymbolMin);
  }();
  return table;
}

int clamp_symbol(double value) {
  return static_cast<int>(std::clamp(std::round(value), double(kSymbolMin), double(kSymbolMax)));
}

void encode_gaussian(RangeEncoder& enc, int symbol, double mu, double sigma) {
  if (symbol < kSymbolMin || symbol > kSymbolMax) {
    throw Error("encode_gaussian: symbol " + std::to_string(symbol) + " outside [-256, 256]");
  }
  const WindowedGaussian w(mu, sigma);
  if (symbol >= w.lo && symbol <= w.hi) {
    enc.encode(w.table, symbol - w.lo);
  } else {
    enc.encode(w.table, w.escape_index());
    enc.encode_symbol(uniform_escape_table(), symbol);
  }
}

int decode_gaussian(RangeDecoder& dec, double mu, double sigma) {
  const WindowedGaussian w(mu, sigma);
  const int index = dec.decode(w.table);
  if (index != w.escape_index()) return w.lo + index;
  return dec.decode_symbol(uniform_escape_table());
}

}  // namespace nvc::entropy
