#pragma once

#include <string>
#include <vector>

#include "nvc/metrics.hpp"
#include "nvc/sequence.hpp"

NVC_BEGIN_NAMESPACE

struct SweepPoint {
  double lambda = 0;  // informational, may be 0 when unknown
  double bpp = 0;
  double ms_ssim = 0;
};

// Encodes `video` with every model, measuring mean bpp and mean MS-SSIM.
std::vector<SweepPoint> sweep_points(const VideoSequence& video, const std::vector<const ModelSet*>& models,
                                     const CodecConfig& cfg);

// Needs at least four models. Points with equal rates are merged (MS-SSIM
// averaged) with a warning on stderr.
RDCurve rd_sweep(const std::string& name, const VideoSequence& video, const std::vector<const ModelSet*>& models,
                 const CodecConfig& cfg);
RDCurve curve_from_points(const std::string& name, std::vector<SweepPoint> points);

// Mean MS-SSIM over corresponding frames.
double mean_ms_ssim(const std::vector<Frame>& a, const std::vector<Frame>& b);

NVC_END_NAMESPACE
