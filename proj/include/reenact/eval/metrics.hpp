#pragma once

#include <span>

#include "reenact/image.hpp"

namespace reenact::eval {

// Returned by psnr() for identical images.
inline constexpr double kPsnrCap = 99.0;

// 10 log10(1 / MSE) for unit dynamic range.
double psnr(const Image& a, const Image& b);

inline constexpr int kSsimWindow = 8;
inline constexpr int kSsimStride = 4;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

// Windowed SSIM on the channel-mean grayscale image: 8x8 windows at stride 4, population
// statistics per window, mean over windows.
double ssim(const Image& a, const Image& b);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

double mean_squared_error(const Image& a, const Image& b);

}  // namespace reenact::eval
