#pragma once

#include <vector>

#include "reenact/image.hpp"

namespace reenact::editing {

struct CropBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

// Box-local blending weights (height x width, row-major). 1 in the interior, falling to 0
// at the box edge: the box indicator eroded by R = ceil(3 sigma), blurred by a Gaussian of
// std `sigma` truncated at R. sigma == 0 gives an all-ones mask.
std::vector<double> feather_alpha(int width, int height, double sigma);

// Blends `edited_crop` into `full_frame` at `box` with feathered edges.
Image paste_back(const Image& full_frame, const CropBox& box, const Image& edited_crop,
                 double feather_sigma);

}  // namespace reenact::editing
