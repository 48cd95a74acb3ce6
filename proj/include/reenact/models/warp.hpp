#pragma once

#include <torch/torch.h>

namespace reenact::models {

// Backward bilinear warp. feature: [B, C, H, W]; flow: [B, 2, H, W] in pixels at the
// feature's own resolution, channel 0 = vertical (dy), channel 1 = horizontal (dx).
//
//   out[b, c, y, x] = bilinear(feature[b, c], clamp(y + dy, 0, H-1), clamp(x + dx, 0, W-1))
//
// Differentiable w.r.t. both inputs; the flow gradient is zero where the sample position
// is clamped. Supports float32 and float64.
torch::Tensor warp(const torch::Tensor& feature, const torch::Tensor& flow);

}  // namespace reenact::models
