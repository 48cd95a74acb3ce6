#include "reenact/eval/metrics.hpp"

#include <cmath>
#include <vector>

namespace reenact::eval {

namespace {

std::vector<double> grayscale(const Image& image) {
  std::vector<double> gray(static_cast<std::size_t>(image.height()) * image.width());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < image.channels(); ++c) sum += image.at(y, x, c);
      gray[static_cast<std::size_t>(y) * image.width() + x] = sum / image.channels();
    }
  }
  return gray;
}

}  // namespace

double mean_squared_error(const Image& a, const Image& b) {
  require_same_shape(a, b, "mean_squared_error");
  double sum = 0.0;
  const auto pa = a.pixels();
  const auto pb = b.pixels();
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - pb[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pa.size());
}

double psnr(const Image& a, const Image& b) {
  const double mse = mean_squared_error(a, b);
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  if (a.height() < kSsimWindow || a.width() < kSsimWindow) {
    throw ShapeError("ssim: image smaller than the 8x8 window");
  }
  const std::vector<double> ga = grayscale(a);
  const std::vector<double> gb = grayscale(b);
  const int width = a.width();
  const double n = kSsimWindow * kSsimWindow;

  double total = 0.0;
  int windows = 0;
  for (int y0 = 0; y0 + kSsimWindow <= a.height(); y0 += kSsimStride) {
    for (int x0 = 0; x0 + kSsimWindow <= width; x0 += kSsimStride) {
      double mean_a = 0.0, mean_b = 0.0;
      for (int y = y0; y < y0 + kSsimWindow; ++y) {
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          mean_a += ga[static_cast<std::size_t>(y) * width + x];
          mean_b += gb[static_cast<std::size_t>(y) * width + x];
        }
      }
      mean_a /= n;
      mean_b /= n;
      double var_a = 0.0, var_b = 0.0, cov = 0.0;
      for (int y = y0; y < y0 + kSsimWindow; ++y) {
        for (int x = x0; x < x0 + kSsimWindow; ++x) {
          const double da = ga[static_cast<std::size_t>(y) * width + x] - mean_a;
          const double db = gb[static_cast<std::size_t>(y) * width + x] - mean_b;
          var_a += da * da;
          var_b += db * db;
          cov += da * db;
        }
      }
      var_a /= n;
      var_b /= n;
      cov /= n;
      total += ((2.0 * mean_a * mean_b + kSsimC1) * (2.0 * cov + kSsimC2)) /
               ((mean_a * mean_a + mean_b * mean_b + kSsimC1) * (var_a + var_b + kSsimC2));
      ++windows;
    }
  }
  return total / windows;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeError("cosine_similarity: size mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace reenact::eval
