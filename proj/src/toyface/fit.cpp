#include "reenact/toyface/fit.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "reenact/toyface/render.hpp"

namespace reenact::toyface {

namespace {

// Scores normalized factor vectors against one target image at one resolution.
class Scorer {
 public:
  Scorer(std::vector<float> target, int resolution)
      : target_(std::move(target)), resolution_(resolution), buffer_(target_.size()) {}

  double operator()(const FactorVector& normalized) {
    render_into(from_normalized(normalized), resolution_, buffer_);
    double sum = 0.0;
    for (std::size_t i = 0; i < buffer_.size(); ++i) {
      const double d = static_cast<double>(buffer_[i]) - target_[i];
      sum += d * d;
    }
    return sum / static_cast<double>(buffer_.size());
  }

 private:
  std::vector<float> target_;
  int resolution_;
  std::vector<float> buffer_;
};

std::vector<float> downsample2(std::span<const float> pixels, int resolution) {
  const int half = resolution / 2;
  std::vector<float> out(static_cast<std::size_t>(half) * half * 3);
  for (int y = 0; y < half; ++y) {
    for (int x = 0; x < half; ++x) {
      for (int c = 0; c < 3; ++c) {
        auto at = [&](int yy, int xx) {
          return pixels[(static_cast<std::size_t>(yy) * resolution + xx) * 3 + c];
        };
        out[(static_cast<std::size_t>(y) * half + x) * 3 + c] =
            0.25f * (at(2 * y, 2 * x) + at(2 * y, 2 * x + 1) + at(2 * y + 1, 2 * x) +
                     at(2 * y + 1, 2 * x + 1));
      }
    }
  }
  return out;
}

double grid_value(int i, int n) { return n == 1 ? 0.5 : static_cast<double>(i) / (n - 1); }

// Exhaustive search over the four factors starting at `offset`, others held at `best`.
void grid_search(Scorer& score, FactorVector& best, int offset, int points) {
  double best_err = std::numeric_limits<double>::infinity();
  FactorVector candidate = best;
  FactorVector winner = best;
  for (int a = 0; a < points; ++a) {
    candidate[offset] = grid_value(a, points);
    for (int b = 0; b < points; ++b) {
      candidate[offset + 1] = grid_value(b, points);
      for (int c = 0; c < points; ++c) {
        candidate[offset + 2] = grid_value(c, points);
        for (int d = 0; d < points; ++d) {
          candidate[offset + 3] = grid_value(d, points);
          const double err = score(candidate);
          if (err < best_err) {
            best_err = err;
            winner = candidate;
          }
        }
      }
    }
  }
  best = winner;
}

// Each factor walks in its improving direction until it stops improving; steps halve after a
// sweep that moved nothing.
double coordinate_descent(Scorer& score, FactorVector& x, double err, const FactorVector& step0,
                          int sweeps, double min_step, int first, int last) {
  FactorVector step = step0;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    bool improved = false;
    for (int i = first; i < last; ++i) {
      for (const double dir : {1.0, -1.0}) {
        bool moved = false;
        for (int walk = 0; walk < 64; ++walk) {
          FactorVector trial = x;
          trial[i] = std::clamp(x[i] + dir * step[i], 0.0, 1.0);
          if (trial[i] == x[i]) break;
          const double e = score(trial);
          if (e < err) {
            err = e;
            x = trial;
            moved = true;
          } else {
            break;
          }
        }
        if (moved) {
          improved = true;
          break;
        }
      }
    }
    if (improved) continue;
    bool all_small = true;
    for (int i = first; i < last; ++i) {
      step[i] *= 0.5;
      all_small = all_small && step[i] < min_step;
    }
    if (all_small) break;
  }
  return err;
}

}  // namespace

FitResult fit_params(const Image& image, const FitOptions& options) {
  const int resolution = image.height();
  FitResult result;
  result.params = ToyFaceParams{};
  if (image.width() != resolution || image.channels() != 3 ||
      !is_supported_resolution(resolution) || resolution < 32) {
    result.residual = std::numeric_limits<double>::infinity();
    return result;
  }
  std::vector<float> target(image.pixels().begin(), image.pixels().end());
  Scorer coarse(downsample2(target, resolution), resolution / 2);
  Scorer fine(target, resolution);

  FactorVector x;
  x.fill(0.5);

  grid_search(coarse, x, kPoseOffset, options.pose_grid);

  FactorVector step;
  for (int i = 0; i < kFactorCount; ++i) {
    step[i] = i < kPoseOffset ? 0.125
              : i < kExpressionOffset ? 1.0 / (options.pose_grid - 1)
                                      : 1.0 / (options.expression_grid - 1);
  }
  // Settle identity and pose before the expression grid so skin/size mismatches do not bias it.
  double err = fine(x);
  err = coordinate_descent(fine, x, err, step, 4, options.min_step, 0, kExpressionOffset);

  grid_search(coarse, x, kExpressionOffset, options.expression_grid);
  err = fine(x);
  err = coordinate_descent(fine, x, err, step, options.sweeps, options.min_step, 0, kFactorCount);

  // Second expression pass at full resolution, now that identity and pose are accurate.
  FactorVector retry = x;
  grid_search(fine, retry, kExpressionOffset, options.expression_grid);
  double retry_err = fine(retry);
  retry_err = coordinate_descent(fine, retry, retry_err, step, options.sweeps, options.min_step, 0,
                                 kFactorCount);
  if (retry_err < err) {
    x = retry;
    err = retry_err;
  }

  result.params = from_normalized(x);
  result.residual = err;
  return result;
}

}  // namespace reenact::toyface
