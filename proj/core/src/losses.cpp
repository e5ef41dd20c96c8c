#include "gml/losses.hpp"

#include <algorithm>
#include <cmath>

namespace gml {

LossValue jaccard_distance(const Grid& pred, const Grid& truth, double eps) {
  require_same_shape(pred, truth, "jaccard_distance");
  if (!(eps > 0.0)) throw Error(ErrorCode::InvalidSpec, "jaccard eps must be > 0");

  double inter = 0.0, sum_p = 0.0, sum_t = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    inter += pred[i] * truth[i];
    sum_p += pred[i];
    sum_t += truth[i];
  }
  const double num = inter + eps;
  const double den = sum_p + sum_t - inter + eps;

  LossValue out{1.0 - num / den, Grid(pred.shape())};
  // d(num/den)/dp_i = (t_i * den - num * (1 - t_i)) / den^2
  const double inv_den2 = 1.0 / (den * den);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    out.grad[i] = -(truth[i] * den - num * (1.0 - truth[i])) * inv_den2;
  }
  return out;
}

LossValue rkld(const Grid& p1, const Grid& p2, const Grid& mask, KldVariant variant, double clamp) {
  require_same_shape(p1, p2, "rkld p1/p2");
  require_same_shape(p1, mask, "rkld p1/mask");

  LossValue out{0.0, Grid(p1.shape())};
  const double count = mask.sum();
  if (count == 0.0) return out;

  const double lo = clamp, hi = 1.0 - clamp;
  double total = 0.0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const double t = mask[i];
    if (t == 0.0) continue;
    const double a = std::clamp(p1[i], lo, hi);
    const double b = std::clamp(p2[i], lo, hi);
    double term = a * std::log(a / b);
    double slope = std::log(a / b) + 1.0;
    if (variant == KldVariant::Full) {
      term += (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
      slope -= std::log((1.0 - a) / (1.0 - b)) + 1.0;
    }
    total += term * t;
    // Clamped voxels are flat in p1.
    const bool inside = p1[i] > lo && p1[i] < hi;
    out.grad[i] = inside ? slope * t / count : 0.0;
  }
  out.value = total / count;
  return out;
}

namespace {

LossValue mutual_loss(const Grid& own, const Grid& peer, const Grid& truth, const LossOptions& opts) {
  LossValue jd = jaccard_distance(own, truth, opts.jaccard_eps);
  LossValue kl = rkld(own, peer, truth, opts.kld_variant, opts.clamp);
  jd.value += kl.value;
  for (std::size_t i = 0; i < jd.grad.size(); ++i) jd.grad[i] += kl.grad[i];
  return jd;
}

}  // namespace

LossValue mutual_loss_receiver(const Grid& pred_r, const Grid& pred_s, const Grid& truth, const LossOptions& opts) {
  return mutual_loss(pred_r, pred_s, truth, opts);
}

LossValue mutual_loss_sender(const Grid& pred_s, const Grid& pred_r, const Grid& truth, const LossOptions& opts) {
  return mutual_loss(pred_s, pred_r, truth, opts);
}

}  // namespace gml
