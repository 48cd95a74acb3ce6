#include "reenact/toyface/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "reenact/errors.hpp"

namespace reenact::toyface {

const std::array<FactorRange, kFactorCount>& factor_table() {
  static const std::array<FactorRange, kFactorCount> table{{
      {"identity.face_width", 0.0, 1.0},
      {"identity.skin_tone", 0.0, 1.0},
      {"identity.eye_spacing", 0.0, 1.0},
      {"identity.hair_shade", 0.0, 1.0},
      {"pose.yaw", -0.5, 0.5},
      {"pose.tx", -8.0, 8.0},
      {"pose.ty", -8.0, 8.0},
      {"pose.scale", 0.8, 1.2},
      {"expression.mouth_open", 0.0, 1.0},
      {"expression.mouth_curve", -1.0, 1.0},
      {"expression.eye_open", 0.0, 1.0},
      {"expression.brow_raise", -1.0, 1.0},
  }};
  return table;
}

FactorVector to_raw(const ToyFaceParams& p) {
  return {p.identity[0], p.identity[1], p.identity[2], p.identity[3],
          p.pose.yaw, p.pose.tx, p.pose.ty, p.pose.scale,
          p.expression.mouth_open, p.expression.mouth_curve, p.expression.eye_open,
          p.expression.brow_raise};
}

ToyFaceParams from_raw(const FactorVector& r) {
  ToyFaceParams p;
  p.identity = {r[0], r[1], r[2], r[3]};
  p.pose = {r[4], r[5], r[6], r[7]};
  p.expression = {r[8], r[9], r[10], r[11]};
  return p;
}

FactorVector to_normalized(const ToyFaceParams& params) {
  FactorVector raw = to_raw(params);
  const auto& table = factor_table();
  for (int i = 0; i < kFactorCount; ++i) {
    raw[i] = (raw[i] - table[i].lo) / (table[i].hi - table[i].lo);
  }
  return raw;
}

ToyFaceParams from_normalized(const FactorVector& normalized) {
  FactorVector raw = normalized;
  const auto& table = factor_table();
  for (int i = 0; i < kFactorCount; ++i) {
    raw[i] = table[i].lo + normalized[i] * (table[i].hi - table[i].lo);
  }
  return from_raw(raw);
}

void validate(const ToyFaceParams& params) {
  const FactorVector raw = to_raw(params);
  const auto& table = factor_table();
  for (int i = 0; i < kFactorCount; ++i) {
    if (!std::isfinite(raw[i]) || raw[i] < table[i].lo || raw[i] > table[i].hi) {
      throw RangeError(std::string(table[i].name) + " = " + std::to_string(raw[i]) +
                       " outside [" + std::to_string(table[i].lo) + ", " +
                       std::to_string(table[i].hi) + "]");
    }
  }
}

ToyFaceParams clamp_to_ranges(const ToyFaceParams& params) {
  FactorVector raw = to_raw(params);
  const auto& table = factor_table();
  for (int i = 0; i < kFactorCount; ++i) raw[i] = std::clamp(raw[i], table[i].lo, table[i].hi);
  return from_raw(raw);
}

}  // namespace reenact::toyface
