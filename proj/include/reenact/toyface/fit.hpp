#pragma once

#include "reenact/image.hpp"
#include "reenact/toyface/params.hpp"

namespace reenact::toyface {

struct FitOptions {
  int pose_grid = 9;         // points per pose factor
  int expression_grid = 7;   // points per expression factor
  int sweeps = 30;           // coordinate-descent sweeps
  double min_step = 1e-4;    // normalized units; refinement stops below this
};

struct FitResult {
  ToyFaceParams params;
  double residual = 0.0;  // mean squared pixel error of render(params) vs the image
};

// Brute-force inverse renderer: coarse grid over pose, then over expression, then
// coordinate descent over all twelve normalized factors with a halving step.
// Never throws on content; a high residual marks an unreliable fit.
FitResult fit_params(const Image& image, const FitOptions& options = {});

// Fits with residual above this are not trusted by evaluation.
inline constexpr double kReliableResidual = 0.05;

}  // namespace reenact::toyface
