#include "reenact/toyface/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace reenact::toyface {

namespace {

using Rgb = std::array<float, 3>;

// Canonical-frame geometry, in units where the image spans [-1, 1].
constexpr double kHeadCenterY = 0.02;
constexpr double kHeadRadiusY = 0.56;
constexpr double kHairCenterY = -0.06;
constexpr double kHairRadiusY = 0.55;
constexpr double kEyeY = -0.08;
constexpr double kEyeRadiusX = 0.095;
constexpr double kEyeRadiusY = 0.085;
constexpr double kPupilRadius = 0.045;
constexpr double kBrowY = -0.265;
constexpr double kBrowHalfWidth = 0.1;
constexpr double kBrowThickness = 0.022;
constexpr double kMouthY = 0.27;
constexpr double kMouthHalfWidth = 0.17;
constexpr double kMouthCurve = 0.14;
constexpr double kMouthLip = 0.02;
constexpr double kMouthOpen = 0.09;

constexpr Rgb kBackground{0.30f, 0.42f, 0.52f};
constexpr Rgb kEyeWhite{0.97f, 0.97f, 0.95f};
constexpr Rgb kPupil{0.08f, 0.06f, 0.05f};
constexpr Rgb kBrow{0.12f, 0.08f, 0.06f};
constexpr Rgb kMouth{0.35f, 0.06f, 0.08f};

Rgb mix(const Rgb& a, const Rgb& b, double t) {
  const float tf = static_cast<float>(t);
  return {a[0] + (b[0] - a[0]) * tf, a[1] + (b[1] - a[1]) * tf, a[2] + (b[2] - a[2]) * tf};
}

// Approximate signed distance to an axis-aligned ellipse.
double ellipse_sd(double x, double y, double a, double b) {
  const double k0 = std::hypot(x / a, y / b);
  const double k1 = std::hypot(x / (a * a), y / (b * b));
  if (k1 == 0.0) return -std::min(a, b);
  return k0 * (k0 - 1.0) / k1;
}

struct Geometry {
  double head_rx;
  double eye_dx;
  double eye_ry;
  double brow_y;
  double mouth_curve;
  double mouth_open;
  Rgb skin;
  Rgb hair;
};

Geometry geometry_of(const ToyFaceParams& p) {
  Geometry g{};
  g.head_rx = 0.38 + 0.10 * p.identity[0];
  g.skin = mix(Rgb{0.96f, 0.82f, 0.70f}, Rgb{0.60f, 0.42f, 0.30f}, p.identity[1]);
  g.eye_dx = 0.15 + 0.07 * p.identity[2];
  g.hair = mix(Rgb{0.10f, 0.07f, 0.05f}, Rgb{0.85f, 0.70f, 0.40f}, p.identity[3]);
  g.eye_ry = kEyeRadiusY * (0.12 + 0.88 * p.expression.eye_open);
  g.brow_y = kBrowY - 0.07 * p.expression.brow_raise;
  g.mouth_curve = p.expression.mouth_curve;
  g.mouth_open = p.expression.mouth_open;
  return g;
}

struct PoseTransform {
  double cos_a, sin_a, inv_scale, tx, ty;
};

PoseTransform pose_transform(const Pose& pose) {
  const double ref_to_norm = 2.0 / kReferenceResolution;
  return {std::cos(pose.yaw), std::sin(pose.yaw), 1.0 / pose.scale, pose.tx * ref_to_norm,
          pose.ty * ref_to_norm};
}

// Image-plane normalized point -> canonical face frame.
void to_canonical(const PoseTransform& t, double u, double v, double& qx, double& qy) {
  const double dx = (u - t.tx) * t.inv_scale;
  const double dy = (v - t.ty) * t.inv_scale;
  qx = t.cos_a * dx + t.sin_a * dy;
  qy = -t.sin_a * dx + t.cos_a * dy;
}

// Canonical point -> image-plane normalized point.
void to_image(const PoseTransform& t, double qx, double qy, double& u, double& v) {
  const double scale = 1.0 / t.inv_scale;
  u = (t.cos_a * qx - t.sin_a * qy) * scale + t.tx;
  v = (t.sin_a * qx + t.cos_a * qy) * scale + t.ty;
}

double coverage(double sd, double aa) { return std::clamp(0.5 - sd / aa, 0.0, 1.0); }

double mouth_center_line(const Geometry& g, double xn) {
  const double profile = 1.0 - xn * xn;
  return kMouthY + kMouthCurve * g.mouth_curve * (profile - 0.5);
}

double mouth_half_height(const Geometry& g, double xn) {
  const double profile = std::max(0.0, 1.0 - xn * xn);
  return kMouthLip + kMouthOpen * g.mouth_open * profile;
}

double head_sd(const Geometry& g, double qx, double qy) {
  return ellipse_sd(qx, qy - kHeadCenterY, g.head_rx, kHeadRadiusY);
}

}  // namespace

bool is_supported_resolution(int resolution) {
  return resolution >= 16 && resolution <= 512 && (resolution & (resolution - 1)) == 0;
}

void render_into(const ToyFaceParams& params, int resolution, std::span<float> out) {
  const Geometry g = geometry_of(params);
  const PoseTransform t = pose_transform(params.pose);
  const double pixel = 2.0 / resolution;
  const double aa = pixel / params.pose.scale;
  // Everything drawn lies within radius 0.62 of the canonical origin.
  const double bound = 0.62 + 2.0 * aa;
  const double bound_sq = bound * bound;

  for (int y = 0; y < resolution; ++y) {
    const double v = (y + 0.5) * pixel - 1.0;
    for (int x = 0; x < resolution; ++x) {
      const double u = (x + 0.5) * pixel - 1.0;
      double qx = 0.0;
      double qy = 0.0;
      to_canonical(t, u, v, qx, qy);

      Rgb color = kBackground;
      if (qx * qx + qy * qy > bound_sq) {
        float* bg = out.data() + (static_cast<std::size_t>(y) * resolution + x) * 3;
        bg[0] = color[0];
        bg[1] = color[1];
        bg[2] = color[2];
        continue;
      }
      const double hair_back = coverage(
          ellipse_sd(qx, qy - kHairCenterY, g.head_rx + 0.05, kHairRadiusY), aa);
      if (hair_back > 0.0) color = mix(color, g.hair, hair_back);

      const double head = coverage(head_sd(g, qx, qy), aa);
      if (head > 0.0) {
        Rgb face = g.skin;
        const double hairline = -0.40 + 0.35 * qx * qx;
        const double cap = coverage(qy - hairline, aa);
        if (cap > 0.0) face = mix(face, g.hair, cap);

        const double ex = std::abs(qx) - g.eye_dx;
        const double eye = coverage(ellipse_sd(ex, qy - kEyeY, kEyeRadiusX, g.eye_ry), aa);
        if (eye > 0.0) {
          face = mix(face, kEyeWhite, eye);
          const double pupil = coverage(std::hypot(ex, qy - kEyeY) - kPupilRadius, aa);
          if (pupil > 0.0) face = mix(face, kPupil, std::min(pupil, eye));
        }

        const double brow_sd = std::max(
            std::abs(qy - (g.brow_y + 1.2 * ex * ex)) - kBrowThickness, std::abs(ex) - kBrowHalfWidth);
        const double brow = coverage(brow_sd, aa);
        if (brow > 0.0) face = mix(face, kBrow, brow);

        const double xn = qx / kMouthHalfWidth;
        const double mouth_sd =
            std::max(std::abs(qy - mouth_center_line(g, xn)) - mouth_half_height(g, xn),
                     std::abs(qx) - kMouthHalfWidth);
        const double mouth = coverage(mouth_sd, aa);
        if (mouth > 0.0) face = mix(face, kMouth, mouth);

        color = mix(color, face, head);
      }
      float* px = out.data() + (static_cast<std::size_t>(y) * resolution + x) * 3;
      px[0] = color[0];
      px[1] = color[1];
      px[2] = color[2];
    }
  }
}

Image render(const ToyFaceParams& params, int resolution) {
  validate(params);
  if (!is_supported_resolution(resolution)) {
    throw ArgumentError("unsupported render resolution " + std::to_string(resolution));
  }
  Image image(resolution, resolution, 3);
  render_into(params, resolution, image.pixels());
  return image;
}

PixelBox mouth_pixel_bounds(const ToyFaceParams& params, int resolution, double max_open) {
  Geometry g = geometry_of(params);
  g.mouth_open = std::max(g.mouth_open, max_open);
  const double aa = 2.0 / resolution / params.pose.scale;
  // Bounds of the mouth shape in the canonical frame, padded by the anti-aliasing ramp.
  double top = 1e9;
  double bottom = -1e9;
  for (int i = 0; i <= 200; ++i) {
    const double xn = -1.0 + i / 100.0;
    const double c = mouth_center_line(g, xn);
    const double h = mouth_half_height(g, xn);
    top = std::min(top, c - h);
    bottom = std::max(bottom, c + h);
  }
  const double pad = aa;
  const double left = -kMouthHalfWidth - pad;
  const double right = kMouthHalfWidth + pad;
  top -= pad;
  bottom += pad;

  const PoseTransform t = pose_transform(params.pose);
  double umin = 1e9, umax = -1e9, vmin = 1e9, vmax = -1e9;
  for (double cx : {left, right}) {
    for (double cy : {top, bottom}) {
      double u = 0.0, v = 0.0;
      to_image(t, cx, cy, u, v);
      umin = std::min(umin, u);
      umax = std::max(umax, u);
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  auto to_pixel = [resolution](double n) { return (n + 1.0) * 0.5 * resolution; };
  PixelBox box;
  box.x0 = std::clamp(static_cast<int>(std::floor(to_pixel(umin))) - 1, 0, resolution);
  box.x1 = std::clamp(static_cast<int>(std::ceil(to_pixel(umax))) + 1, 0, resolution);
  box.y0 = std::clamp(static_cast<int>(std::floor(to_pixel(vmin))) - 1, 0, resolution);
  box.y1 = std::clamp(static_cast<int>(std::ceil(to_pixel(vmax))) + 1, 0, resolution);
  return box;
}

std::vector<bool> face_interior_mask(const ToyFaceParams& params, int resolution) {
  const Geometry g = geometry_of(params);
  const PoseTransform t = pose_transform(params.pose);
  const double pixel = 2.0 / resolution;
  const double aa = pixel / params.pose.scale;
  std::vector<bool> mask(static_cast<std::size_t>(resolution) * resolution, false);
  for (int y = 0; y < resolution; ++y) {
    for (int x = 0; x < resolution; ++x) {
      double qx = 0.0, qy = 0.0;
      to_canonical(t, (x + 0.5) * pixel - 1.0, (y + 0.5) * pixel - 1.0, qx, qy);
      mask[static_cast<std::size_t>(y) * resolution + x] = coverage(head_sd(g, qx, qy), aa) > 0.0;
    }
  }
  return mask;
}

}  // namespace reenact::toyface
