#include "reenact/image_tensor.hpp"

#include "reenact/errors.hpp"

namespace reenact {

torch::Tensor to_tensor(const Image& image) {
  const auto px = image.pixels();
  auto hwc = torch::from_blob(const_cast<float*>(px.data()),
                              {image.height(), image.width(), image.channels()}, torch::kFloat32);
  return hwc.permute({2, 0, 1}).unsqueeze(0).contiguous();
}

torch::Tensor to_tensor(const std::vector<Image>& images) {
  if (images.empty()) throw ArgumentError("to_tensor: empty image list");
  std::vector<torch::Tensor> parts;
  parts.reserve(images.size());
  for (const auto& image : images) {
    require_same_shape(images.front(), image, "to_tensor");
    parts.push_back(to_tensor(image));
  }
  return torch::cat(parts, 0);
}

Image to_image(const torch::Tensor& tensor, std::int64_t index) {
  torch::Tensor chw = tensor.dim() == 4 ? tensor[index] : tensor;
  if (chw.dim() != 3) throw ShapeError("to_image: expected [N,C,H,W] or [C,H,W]");
  auto hwc = chw.detach().to(torch::kFloat32).clamp(0.0, 1.0).permute({1, 2, 0}).contiguous();
  Image out(static_cast<int>(hwc.size(0)), static_cast<int>(hwc.size(1)), static_cast<int>(hwc.size(2)));
  std::copy(hwc.data_ptr<float>(), hwc.data_ptr<float>() + hwc.numel(), out.pixels().begin());
  return out;
}

}  // namespace reenact
