#include <algorithm>
#include <cmath>
#include <numeric>

#include "nvc/error.hpp"
#include "nvc/metrics.hpp"

namespace nvc {

RDCurve RDCurve::from(std::string name, const std::vector<double>& rates, const std::vector<double>& ms_ssim) {
  if (rates.size() != ms_ssim.size()) throw Error("RDCurve: rate and distortion lists differ in length");
  RDCurve c;
  c.name = std::move(name);
  for (std::size_t i = 0; i < rates.size(); ++i) c.points.push_back({rates[i], ms_ssim[i], to_db(ms_ssim[i])});
  std::sort(c.points.begin(), c.points.end(), [](const RDPoint& a, const RDPoint& b) { return a.rate < b.rate; });
  return c;
}

void RDCurve::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!(p.rate > 0)) throw Error("RD curve " + name + ": rate must be positive");
    if (!(p.ms_ssim >= 0 && p.ms_ssim <= 1)) throw Error("RD curve " + name + ": MS-SSIM outside [0, 1]");
    if (i > 0 && !(p.rate > points[i - 1].rate)) throw Error("RD curve " + name + ": rates must strictly increase");
  }
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n < 2 || y_.size() != n) throw Error("pchip: need at least two knots");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw Error("pchip: knots must strictly increase");
  }
  std::vector<double> h(n - 1), delta(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    h[i] = x_[i + 1] - x_[i];
    delta[i] = (y_[i + 1] - y_[i]) / h[i];
  }
  d_.assign(n, 0.0);
  if (n == 2) {
    d_[0] = d_[1] = delta[0];
    return;
  }
  for (std::size_t k = 1; k + 1 < n; ++k) {
    if (delta[k - 1] * delta[k] <= 0) continue;
    const double w1 = 2 * h[k] + h[k - 1], w2 = h[k] + 2 * h[k - 1];
    d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
  }
  auto edge = [](double h0, double h1, double m0, double m1) {
    double d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (std::signbit(d) != std::signbit(m0) || d == 0 || m0 == 0) {
      d = 0;
    } else if (std::signbit(m0) != std::signbit(m1) && std::abs(d) > 3 * std::abs(m0)) {
      d = 3 * m0;
    }
    return d;
  };
  d_[0] = edge(h[0], h[1], delta[0], delta[1]);
  d_[n - 1] = edge(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
}

namespace {

// Antiderivative (in the unit parameter s) of the Hermite basis combination.
double hermite_integral(double s, double y0, double y1, double m0, double m1, double h) {
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  const double h00 = s4 / 2 - s3 + s;
  const double h10 = s4 / 4 - 2 * s3 / 3 + s2 / 2;
  const double h01 = -s4 / 2 + s3;
  const double h11 = s4 / 4 - s3 / 3;
  return h * (y0 * h00 + h * m0 * h10 + y1 * h01 + h * m1 * h11);
}

}  // namespace

double Pchip::operator()(double x) const {
  const std::size_t n = x_.size();
  std::size_t k = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin());
  k = std::clamp<std::size_t>(k, 1, n - 1) - 1;
  const double h = x_[k + 1] - x_[k];
  const double s = (x - x_[k]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return y_[k] * (2 * s3 - 3 * s2 + 1) + h * d_[k] * (s3 - 2 * s2 + s) + y_[k + 1] * (-2 * s3 + 3 * s2) +
         h * d_[k + 1] * (s3 - s2);
}

double Pchip::integral(double a, double b) const {
  if (a > b) return -integral(b, a);
  if (a < x_.front() || b > x_.back()) throw Error("pchip: integration bounds outside the knot range");
  double total = 0;
  for (std::size_t k = 0; k + 1 < x_.size(); ++k) {
    const double lo = std::max(a, x_[k]), hi = std::min(b, x_[k + 1]);
    if (lo >= hi) continue;
    const double h = x_[k + 1] - x_[k];
    const double sa = (lo - x_[k]) / h, sb = (hi - x_[k]) / h;
    if (sa == 0 && sb == 1) {
      total += h * (y_[k] + y_[k + 1]) / 2 + h * h * (d_[k] - d_[k + 1]) / 12;
    } else {
      total += hermite_integral(sb, y_[k], y_[k + 1], d_[k], d_[k + 1], h) -
               hermite_integral(sa, y_[k], y_[k + 1], d_[k], d_[k + 1], h);
    }
  }
  return total;
}

namespace {

Pchip log_rate_of_db(const RDCurve& c) {
  if (c.points.size() < 4) {
    throw Error("bd_rate: curve " + c.name + " has " + std::to_string(c.points.size()) + " points, need at least 4");
  }
  c.validate();
  std::vector<RDPoint> pts = c.points;
  std::sort(pts.begin(), pts.end(), [](const RDPoint& a, const RDPoint& b) { return a.db < b.db; });
  std::vector<double> x, y;
  for (const auto& p : pts) {
    if (!x.empty() && !(p.db > x.back())) {
      throw Error("bd_rate: curve " + c.name + " has repeated distortion values");
    }
    x.push_back(p.db);
    y.push_back(std::log(p.rate));
  }
  return Pchip(std::move(x), std::move(y));
}

std::pair<double, double> db_range(const RDCurve& c) {
  const auto [lo, hi] = std::minmax_element(c.points.begin(), c.points.end(),
                                            [](const RDPoint& a, const RDPoint& b) { return a.db < b.db; });
  return {lo->db, hi->db};
}

}  // namespace

double bd_rate(const RDCurve& anchor, const RDCurve& test) {
  const Pchip fa = log_rate_of_db(anchor), ft = log_rate_of_db(test);
  const auto [alo, ahi] = db_range(anchor);
  const auto [tlo, thi] = db_range(test);
  const double lo = std::max(alo, tlo), hi = std::min(ahi, thi);
  if (!(hi > lo)) throw Error("bd_rate: curves " + anchor.name + " and " + test.name + " share no distortion range");
  const double avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
  return std::expm1(avg) * 100.0;
}

}  // namespace nvc
