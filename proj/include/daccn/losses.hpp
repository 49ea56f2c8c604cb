#pragma once

#include <vector>

#include "daccn/tensor.hpp"

namespace daccn {

struct LossConfig {
  Real alpha = 0.85;    // SSIM vs L1 weight in the photometric error
  Real lambda = 1e-3;   // smoothness weight
  bool min_over_sources = true;
  int num_scales = 4;

  void validate() const;
};

inline constexpr Real kSsimC1 = 0.01 * 0.01;
inline constexpr Real kSsimC2 = 0.03 * 0.03;
inline constexpr Real kSmoothnessEps = 1e-7;

/// Per-pixel SSIM over 3x3 box windows with reflection padding; same shape as the inputs.
Tensor ssim(const Tensor& a, const Tensor& b);

struct SynthesizedView {
  Tensor image;       // [N,C,H,W]
  Tensor valid_mask;  // [N,1,H,W]
};

/// alpha/2 (1 - SSIM) + (1 - alpha) |a - b|, each averaged over channels: [N,1,H,W].
Tensor photometric_error_map(const Tensor& synthesized, const Tensor& target, Real alpha);

/// Masked photometric reprojection loss over one or more synthesized views.
/// With min_over_sources the per-pixel minimum across valid sources is taken
/// before averaging over pixels valid in at least one source; otherwise every
/// valid (source, pixel) pair is averaged. DegenerateError when nothing is valid.
Tensor photometric_loss(const std::vector<SynthesizedView>& synthesized, const Tensor& target, const LossConfig& cfg);

/// Edge-aware smoothness of mean-normalized disparity [N,1,H,W] against image [N,C,H,W].
/// The per-sample mean is floored at kSmoothnessEps, so the loss is exactly invariant to
/// positive rescaling of disp whenever that mean exceeds the floor.
Tensor smoothness_loss(const Tensor& disp, const Tensor& image);

/// Mean over scales of (L_p + lambda L_s).
Tensor total_loss(const std::vector<Tensor>& photometric_per_scale, const std::vector<Tensor>& smoothness_per_scale,
                  const LossConfig& cfg);

}  // namespace daccn
