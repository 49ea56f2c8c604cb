#include "daccn/losses.hpp"

#include <limits>

#include "daccn/errors.hpp"
#include "daccn/ops.hpp"

namespace daccn {

void LossConfig::validate() const {
  if (!(alpha >= 0 && alpha <= 1)) throw ConfigError("loss.alpha must lie in [0, 1]");
  if (!(lambda >= 0)) throw ConfigError("loss.lambda must be >= 0");
  if (num_scales < 1) throw ConfigError("loss.num_scales must be >= 1");
}

namespace {

Tensor box3(const Tensor& x) { return avg_pool2d(pad_reflect(x, 1), 3, 1); }

// A large penalty that keeps masked-out sources from winning the per-pixel minimum.
constexpr Real kInvalidPenalty = 1e3;

}  // namespace

Tensor ssim(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw DimensionError("ssim: shape mismatch " + shape_to_string(a.shape()) + " vs " + shape_to_string(b.shape()));
  const Tensor mu_a = box3(a), mu_b = box3(b);
  const Tensor var_a = box3(a * a) - mu_a * mu_a;
  const Tensor var_b = box3(b * b) - mu_b * mu_b;
  const Tensor cov = box3(a * b) - mu_a * mu_b;
  const Tensor num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
  const Tensor den = (mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2);
  return num / den;
}

Tensor photometric_error_map(const Tensor& synthesized, const Tensor& target, Real alpha) {
  const Tensor structural = reduce(Reduction::mean, 1.0 - ssim(synthesized, target), {1}, true) * (alpha / 2);
  const Tensor l1 = reduce(Reduction::mean, abs(synthesized - target), {1}, true) * (1 - alpha);
  return structural + l1;
}

Tensor photometric_loss(const std::vector<SynthesizedView>& synthesized, const Tensor& target, const LossConfig& cfg) {
  cfg.validate();
  if (synthesized.empty()) throw ContractError("photometric_loss: need at least one synthesized view");
  for (const auto& view : synthesized) {
    if (view.image.shape() != target.shape())
      throw DimensionError("photometric_loss: synthesized view shape does not match target");
    const Shape mask_shape{target.dim(0), 1, target.dim(2), target.dim(3)};
    if (view.valid_mask.shape() != mask_shape) throw DimensionError("photometric_loss: mask shape mismatch");
  }

  if (!cfg.min_over_sources) {
    Tensor weighted, count;
    for (const auto& view : synthesized) {
      const Tensor e = sum(photometric_error_map(view.image, target, cfg.alpha) * view.valid_mask);
      weighted = weighted.defined() ? weighted + e : e;
      const Tensor c = sum(view.valid_mask);
      count = count.defined() ? count + c : c;
    }
    if (count.item() == 0) throw DegenerateError("photometric_loss: no valid pixel in any source");
    return weighted / count;
  }

  Tensor best;
  std::vector<Real> any_valid(synthesized.front().valid_mask.values().size(), 0);
  for (const auto& view : synthesized) {
    const Tensor& m = view.valid_mask;
    const Tensor e = photometric_error_map(view.image, target, cfg.alpha) * m + (1.0 - m) * kInvalidPenalty;
    best = best.defined() ? minimum(best, e) : e;
    for (std::size_t k = 0; k < any_valid.size(); ++k) any_valid[k] = std::max(any_valid[k], m.values()[k]);
  }
  const Tensor union_mask = Tensor::from_values(synthesized.front().valid_mask.shape(), std::move(any_valid));
  const Real count = sum(union_mask).item();
  if (count == 0) throw DegenerateError("photometric_loss: no valid pixel in any source");
  return sum(best * union_mask) / count;
}

Tensor smoothness_loss(const Tensor& disp, const Tensor& image) {
  if (disp.rank() != 4 || disp.dim(1) != 1) throw DimensionError("smoothness_loss: disparity must be [N,1,H,W]");
  if (image.rank() != 4 || image.dim(0) != disp.dim(0) || image.dim(2) != disp.dim(2) || image.dim(3) != disp.dim(3))
    throw DimensionError("smoothness_loss: image shape " + shape_to_string(image.shape()) +
                         " inconsistent with disparity " + shape_to_string(disp.shape()));
  const auto h = disp.dim(2), w = disp.dim(3);
  const Tensor normalized =
      disp / clamp(reduce(Reduction::mean, disp, {2, 3}, true), kSmoothnessEps, std::numeric_limits<Real>::max());

  Tensor loss = Tensor::scalar(0);
  if (w > 1) {
    const Tensor dx = abs(slice(normalized, 3, 1, w - 1) - slice(normalized, 3, 0, w - 1));
    const Tensor ix = reduce(Reduction::mean, abs(slice(image, 3, 1, w - 1) - slice(image, 3, 0, w - 1)), {1}, true);
    loss = loss + mean(dx * exp(-ix));
  }
  if (h > 1) {
    const Tensor dy = abs(slice(normalized, 2, 1, h - 1) - slice(normalized, 2, 0, h - 1));
    const Tensor iy = reduce(Reduction::mean, abs(slice(image, 2, 1, h - 1) - slice(image, 2, 0, h - 1)), {1}, true);
    loss = loss + mean(dy * exp(-iy));
  }
  return loss;
}

Tensor total_loss(const std::vector<Tensor>& photometric_per_scale, const std::vector<Tensor>& smoothness_per_scale,
                  const LossConfig& cfg) {
  cfg.validate();
  if (photometric_per_scale.size() != smoothness_per_scale.size() ||
      photometric_per_scale.size() != static_cast<std::size_t>(cfg.num_scales))
    throw ContractError("total_loss: expected " + std::to_string(cfg.num_scales) + " scales, got " +
                        std::to_string(photometric_per_scale.size()) + " photometric and " +
                        std::to_string(smoothness_per_scale.size()) + " smoothness terms");
  Tensor acc;
  for (std::size_t s = 0; s < photometric_per_scale.size(); ++s) {
    const Tensor term = photometric_per_scale[s] + smoothness_per_scale[s] * cfg.lambda;
    acc = acc.defined() ? acc + term : term;
  }
  return acc / static_cast<Real>(photometric_per_scale.size());
}

}  // namespace daccn
