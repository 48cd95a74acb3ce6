#pragma once

#include <torch/torch.h>

#include <vector>

#include "reenact/image.hpp"

namespace reenact {

// HWC image -> [1, C, H, W] float32 tensor.
torch::Tensor to_tensor(const Image& image);
// Stacks equally shaped images into [N, C, H, W].
torch::Tensor to_tensor(const std::vector<Image>& images);
// One element of an [N, C, H, W] (or [C, H, W]) tensor back to an image; values are clamped to [0, 1].
Image to_image(const torch::Tensor& tensor, std::int64_t index = 0);

}  // namespace reenact
