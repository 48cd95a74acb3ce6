#pragma once

#include <span>
#include <vector>

#include "reenact/image.hpp"
#include "reenact/toyface/params.hpp"

namespace reenact::toyface {

inline constexpr const char* kRendererVersion = "toyface-render/1";
inline constexpr int kDefaultResolution = 64;

// Resolution must be a power of two in [16, 512].
bool is_supported_resolution(int resolution);

// Anti-aliased cartoon face: drawn in a canonical frame, then rotated/scaled/translated by the pose.
Image render(const ToyFaceParams& params, int resolution = kDefaultResolution);

// Allocation-free variant for the fitting loop; `out` must hold resolution^2 * 3 floats.
// Skips range validation.
void render_into(const ToyFaceParams& params, int resolution, std::span<float> out);

struct PixelBox {
  int x0 = 0;  // inclusive
  int y0 = 0;
  int x1 = 0;  // exclusive
  int y1 = 0;
  bool contains(int x, int y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

// Pixel bounding box of everything the mouth can touch for this params' mouth_curve and
// mouth_open (and any value up to `max_open`), under the params' pose, including the
// anti-aliasing ramp.
PixelBox mouth_pixel_bounds(const ToyFaceParams& params, int resolution, double max_open = 1.0);

// Per-pixel flag: true wherever the (posed) head has nonzero coverage, anti-aliased rim
// included. Facial features are composited through this footprint only.
std::vector<bool> face_interior_mask(const ToyFaceParams& params, int resolution);

}  // namespace reenact::toyface
