#include "reenact/editing/paste_back.hpp"

#include <cmath>
#include <string>

namespace reenact::editing {

namespace {

std::vector<double> feather_profile(int length, double sigma) {
  std::vector<double> profile(length, 1.0);
  if (sigma <= 0.0) return profile;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  double norm = 0.0;
  for (int j = -radius; j <= radius; ++j) {
    kernel[j + radius] = std::exp(-(j * j) / (2.0 * sigma * sigma));
    norm += kernel[j + radius];
  }
  for (double& k : kernel) k /= norm;

  auto inside = [&](int i) { return i >= radius && i < length - radius; };
  for (int i = 0; i < length; ++i) {
    if (i - radius >= radius && i + radius < length - radius) {
      profile[i] = 1.0;
      continue;
    }
    double sum = 0.0;
    for (int j = -radius; j <= radius; ++j) {
      if (inside(i + j)) sum += kernel[j + radius];
    }
    profile[i] = sum;
  }
  return profile;
}

}  // namespace

std::vector<double> feather_alpha(int width, int height, double sigma) {
  const std::vector<double> px = feather_profile(width, sigma);
  const std::vector<double> py = feather_profile(height, sigma);
  std::vector<double> alpha(static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) alpha[static_cast<std::size_t>(y) * width + x] = py[y] * px[x];
  }
  return alpha;
}

Image paste_back(const Image& full_frame, const CropBox& box, const Image& edited_crop,
                 double feather_sigma) {
  if (box.width <= 0 || box.height <= 0 || box.x < 0 || box.y < 0 ||
      box.x + box.width > full_frame.width() || box.y + box.height > full_frame.height()) {
    throw ArgumentError("paste_back: crop box (" + std::to_string(box.x) + "," +
                        std::to_string(box.y) + "," + std::to_string(box.width) + "x" +
                        std::to_string(box.height) + ") outside the frame");
  }
  if (edited_crop.width() != box.width || edited_crop.height() != box.height ||
      edited_crop.channels() != full_frame.channels()) {
    throw ArgumentError("paste_back: edited crop does not match the crop box");
  }
  if (feather_sigma < 0.0) throw ArgumentError("paste_back: feather sigma must be >= 0");

  const std::vector<double> alpha = feather_alpha(box.width, box.height, feather_sigma);
  Image out = full_frame;
  for (int y = 0; y < box.height; ++y) {
    for (int x = 0; x < box.width; ++x) {
      const double a = alpha[static_cast<std::size_t>(y) * box.width + x];
      if (a == 0.0) continue;
      for (int c = 0; c < out.channels(); ++c) {
        float& dst = out.at(box.y + y, box.x + x, c);
        const float src = edited_crop.at(y, x, c);
        dst = a == 1.0 ? src : static_cast<float>(dst + a * (static_cast<double>(src) - dst));
      }
    }
  }
  return out;
}

}  // namespace reenact::editing
