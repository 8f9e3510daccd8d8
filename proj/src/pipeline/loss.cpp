#include "nvc/loss.hpp"

#include "nvc/error.hpp"
#include "nvc/ms_ssim_diff.hpp"

NVC_BEGIN_NAMESPACE

Tensor l1_loss(const Tensor& a, const Tensor& b) { return ops::mean(ops::abs(ops::sub(a, b))); }

namespace {

Tensor mean_of(const std::vector<Tensor>& terms) {
  Tensor acc = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) acc = ops::add(acc, terms[i]);
  return ops::mul_scalar(acc, static_cast<Scalar>(1.0 / static_cast<double>(terms.size())));
}

}  // namespace

LossTerms rd_loss(const std::vector<Tensor>& frames, const std::vector<Tensor>& recon,
                  const std::vector<Tensor>& refined, const std::vector<Tensor>& flows, const Tensor& rate_intra,
                  const std::vector<Tensor>& rate_inter, const LossWeights& w) {
  if (frames.empty()) throw Error("rd_loss: no frames");
  const std::size_t n = frames.size() - 1;
  if (recon.size() != frames.size() || refined.size() != n || flows.size() != n || rate_inter.size() != n) {
    throw Error("rd_loss: expected " + std::to_string(frames.size()) + " reconstructions and " + std::to_string(n) +
                " predictions, flows and inter rates; got " + std::to_string(recon.size()) + ", " +
                std::to_string(refined.size()) + ", " + std::to_string(flows.size()) + ", " +
                std::to_string(rate_inter.size()));
  }
  std::vector<Tensor> d1;
  for (std::size_t t = 0; t < frames.size(); ++t) d1.push_back(ms_ssim_distortion(recon[t], frames[t]));
  const Tensor dist = ops::mul_scalar(mean_of(d1), static_cast<Scalar>(w.lambda1));
  Tensor total = ops::add(dist, rate_intra);
  LossTerms out;
  out.distortion = dist.item();
  out.rate_intra = rate_intra.item();
  if (n > 0) {
    std::vector<Tensor> d2;
    for (std::size_t t = 0; t < n; ++t) {
      d2.push_back(ops::add(l1_loss(refined[t], frames[t + 1]),
                            ops::mul_scalar(ops::total_variation(flows[t]), static_cast<Scalar>(w.tv_weight))));
    }
    const Tensor warp = ops::mul_scalar(mean_of(d2), static_cast<Scalar>(w.lambda2));
    const Tensor rt = mean_of(rate_inter);
    out.warp = warp.item();
    out.rate_inter = rt.item();
    total = ops::add(total, ops::add(warp, rt));
  }
  out.total = total;
  out.value = total.item();
  return out;
}

NVC_END_NAMESPACE
