#include "nvc/sweep.hpp"

#include <algorithm>
#include <iostream>

#include "nvc/error.hpp"

NVC_BEGIN_NAMESPACE

double mean_ms_ssim(const std::vector<Frame>& a, const std::vector<Frame>& b) {
  if (a.size() != b.size() || a.empty()) throw Error("mean_ms_ssim: frame lists differ in length or are empty");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += ms_ssim(a[i], b[i]);
  return s / static_cast<double>(a.size());
}

std::vector<SweepPoint> sweep_points(const VideoSequence& video, const std::vector<const ModelSet*>& models,
                                     const CodecConfig& cfg) {
  std::vector<SweepPoint> pts;
  for (const ModelSet* m : models) {
    const EncodeResult r = encode_sequence(video, *m, cfg);
    pts.push_back({0, r.mean_bpp(), mean_ms_ssim(r.recon, video.frames)});
  }
  return pts;
}

RDCurve curve_from_points(const std::string& name, std::vector<SweepPoint> points) {
  std::stable_sort(points.begin(), points.end(),
                   [](const SweepPoint& a, const SweepPoint& b) { return a.bpp < b.bpp; });
  std::vector<double> rates, quality;
  for (std::size_t i = 0; i < points.size();) {
    std::size_t j = i;
    double q = 0;
    while (j < points.size() && points[j].bpp == points[i].bpp) q += points[j++].ms_ssim;
    if (j - i > 1) {
      std::cerr << "warning: " << (j - i) << " sweep points share rate " << points[i].bpp << " bpp; merged\n";
    }
    rates.push_back(points[i].bpp);
    quality.push_back(q / static_cast<double>(j - i));
    i = j;
  }
  RDCurve c = RDCurve::from(name, rates, quality);
  c.validate();
  return c;
}

RDCurve rd_sweep(const std::string& name, const VideoSequence& video, const std::vector<const ModelSet*>& models,
                 const CodecConfig& cfg) {
  if (models.size() < 4)
    throw UsageError("rd_sweep: needs at least 4 checkpoints, got " + std::to_string(models.size()));
  return curve_from_points(name, sweep_points(video, models, cfg));
}

NVC_END_NAMESPACE
