#pragma once

#include <array>
#include <string_view>

namespace reenact::toyface {

inline constexpr int kIdentityFactors = 4;
inline constexpr int kPoseFactors = 4;
inline constexpr int kExpressionFactors = 4;
inline constexpr int kFactorCount = kIdentityFactors + kPoseFactors + kExpressionFactors;

// Translation is expressed in pixels of the 64x64 reference grid and scales with resolution.
inline constexpr int kReferenceResolution = 64;

struct Pose {
  double yaw = 0.0;    // in-plane head rotation, radians
  double tx = 0.0;     // reference pixels
  double ty = 0.0;
  double scale = 1.0;
  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Expression {
  double mouth_open = 0.0;
  double mouth_curve = 0.0;
  double eye_open = 1.0;
  double brow_raise = 0.0;
  friend bool operator==(const Expression&, const Expression&) = default;
};

// identity = {face width, skin tone, eye spacing, hair shade}, each in [0,1].
struct ToyFaceParams {
  std::array<double, kIdentityFactors> identity{0.5, 0.5, 0.5, 0.5};
  Pose pose{};
  Expression expression{};
  friend bool operator==(const ToyFaceParams&, const ToyFaceParams&) = default;
};

struct FactorRange {
  std::string_view name;
  double lo;
  double hi;
};

// Flat factor order: identity[0..3], yaw, tx, ty, scale, mouth_open, mouth_curve, eye_open, brow_raise.
const std::array<FactorRange, kFactorCount>& factor_table();

inline constexpr int kPoseOffset = kIdentityFactors;
inline constexpr int kExpressionOffset = kIdentityFactors + kPoseFactors;

using FactorVector = std::array<double, kFactorCount>;

FactorVector to_raw(const ToyFaceParams& params);
ToyFaceParams from_raw(const FactorVector& raw);

// Each factor mapped affinely from its declared range to [0,1].
FactorVector to_normalized(const ToyFaceParams& params);
ToyFaceParams from_normalized(const FactorVector& normalized);

// Throws RangeError naming the first out-of-range field.
void validate(const ToyFaceParams& params);

ToyFaceParams clamp_to_ranges(const ToyFaceParams& params);

}  // namespace reenact::toyface
