#pragma once

#include <map>
#include <string>
#include <vector>

#include "nvc/frame.hpp"

namespace nvc {

struct MsSsimOptions {
  int max_scales = 5;
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Canonical scale weights, coarsest last.
inline constexpr double kMsSsimWeights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

// Number of scales used for a frame whose shorter side is `min_side`: the
// largest M <= max_scales with min_side >= 10 * 2^(M-1) (at least 1). Frames of
// 160 px or more get all five.
int ms_ssim_scales(int min_side, int max_scales = 5);
std::vector<double> gaussian_window(int size, double sigma);
// Scale weights for M scales: the first M canonical weights renormalized.
std::vector<double> ms_ssim_weights(int scales);

// MS-SSIM on a single plane (row-major, values in [0, 1]).
double ms_ssim_plane(const std::vector<double>& a, const std::vector<double>& b, int width, int height,
                     const MsSsimOptions& opt = {});
// Per-channel MS-SSIM averaged over R, G, B.
double ms_ssim(const Frame& a, const Frame& b, const MsSsimOptions& opt = {});

// -10 log10(1 - d); d = 1 maps to `ceiling`.
double to_db(double d, double ceiling = 100.0);

struct RDPoint {
  double rate = 0;     // bits per pixel
  double ms_ssim = 0;  // [0, 1]
  double db = 0;       // to_db(ms_ssim)
};

struct RDCurve {
  std::string name;
  std::vector<RDPoint> points;

  static RDCurve from(std::string name, const std::vector<double>& rates, const std::vector<double>& ms_ssim);
  // Sorted by rate; throws on invalid points or duplicate rates.
  void validate() const;
};

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson slopes, the
// same construction as scipy's PchipInterpolator).
class Pchip {
 public:
  Pchip(std::vector<double> x, std::vector<double> y);
  double operator()(double x) const;
  // Exact integral over [a, b] within the knot range.
  double integral(double a, double b) const;
  const std::vector<double>& slopes() const { return d_; }

 private:
  std::vector<double> x_, y_, d_;
};

// Bjontegaard delta rate in percent: average difference of ln(rate) between
// the test and anchor curves over the overlapping dB range.
double bd_rate(const RDCurve& anchor, const RDCurve& test);

// Files written by rd_table_report.
struct ReportFiles {
  std::string points_csv;
  std::string summary_csv;
  std::vector<std::string> plots;
};

// CSV with header "sequence,rate_bpp,ms_ssim,ms_ssim_db" and one row per point.
std::string rd_points_csv(const std::vector<RDCurve>& curves);
// One row per sequence with its BD-rate against the matching anchor, then an
// "average" row.
std::string bd_summary_csv(const std::vector<RDCurve>& anchors, const std::vector<RDCurve>& tests);
std::string rd_svg(const RDCurve& curve, const RDCurve* anchor = nullptr);

// Writes rd_points.csv and one <name>.svg per curve into `dir`; with anchors
// (same order and names as curves) also bd_summary.csv.
ReportFiles rd_table_report(const std::vector<RDCurve>& curves, const std::string& dir,
                            const std::vector<RDCurve>& anchors = {});

// Parses rd_points.csv back into curves keyed by sequence name.
std::map<std::string, RDCurve> read_rd_csv(const std::string& path);

}  // namespace nvc
