#pragma once

#include "gml/grid.hpp"

namespace gml {

/// Which divergence the regional alignment term evaluates per masked voxel.
///  Eq1:  p1 ln(p1/p2)                                   (tumor-class term only)
///  Full: p1 ln(p1/p2) + (1-p1) ln((1-p1)/(1-p2))        (Bernoulli KL)
enum class KldVariant { Eq1, Full };

struct LossOptions {
  double jaccard_eps = 1e-5;
  KldVariant kld_variant = KldVariant::Eq1;
  double clamp = 1e-7;
};

struct LossValue {
  double value = 0.0;
  Grid grad;  // d value / d (first prediction argument)
};

/// 1 - (sum p*t + eps) / (sum p + sum t - sum p*t + eps).
LossValue jaccard_distance(const Grid& pred, const Grid& truth, double eps = 1e-5);

/// Regional KL divergence of p1 from p2 restricted to mask voxels and
/// normalized by the mask count. Probabilities are clamped into
/// [clamp, 1 - clamp] before the logarithm; an empty mask gives 0. The
/// gradient is taken w.r.t. p1 only, p2 is a constant target.
LossValue rkld(const Grid& p1, const Grid& p2, const Grid& mask, KldVariant variant = KldVariant::Eq1,
               double clamp = 1e-7);

/// Objective for the receiver's model: JD(P_r, M_r) + rKLD(P_r, P_s | M_r).
/// Gradient is w.r.t. pred_r; pred_s is detached.
LossValue mutual_loss_receiver(const Grid& pred_r, const Grid& pred_s, const Grid& truth,
                               const LossOptions& opts = {});

/// Objective for the incoming model's copy: JD(P_s, M_r) + rKLD(P_s, P_r | M_r).
/// Gradient is w.r.t. pred_s; pred_r is detached.
LossValue mutual_loss_sender(const Grid& pred_s, const Grid& pred_r, const Grid& truth,
                             const LossOptions& opts = {});

}  // namespace gml
