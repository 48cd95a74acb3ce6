#include <doctest.h>

#include <random>

#include "reenact/toyface/fit.hpp"
#include "reenact/toyface/render.hpp"

using namespace reenact;
using namespace reenact::toyface;

namespace {

FactorVector random_factors(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  FactorVector v;
  for (auto& x : v) x = u(rng);
  return v;
}

double worst_error(const FactorVector& a, const FactorVector& b) {
  double w = 0.0;
  for (int i = 0; i < kFactorCount; ++i) w = std::max(w, std::abs(a[i] - b[i]));
  return w;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("fit recovers 100 random renders") {
  std::mt19937_64 rng(42);
  for (int k = 0; k < 100; ++k) {
    const FactorVector truth = random_factors(rng);
    const FitResult r = fit_params(render(from_normalized(truth), 64));
    INFO("case " << k);
    CHECK(worst_error(to_normalized(r.params), truth) <= 0.02);
    CHECK(r.residual < 1e-4);
  }
}

TEST_CASE("fit tolerates uniform noise of amplitude 0.05") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> noise(-0.05, 0.05);
  for (int k = 0; k < 20; ++k) {
    const FactorVector truth = random_factors(rng);
    Image img = render(from_normalized(truth), 64);
    for (float& px : img.pixels()) px += static_cast<float>(noise(rng));
    const FitResult r = fit_params(img);
    INFO("case " << k);
    CHECK(worst_error(to_normalized(r.params), truth) <= 0.05);
    CHECK(r.residual <= kReliableResidual);
  }
}

TEST_CASE("a black image is flagged unreliable") {
  const FitResult r = fit_params(Image(64, 64, 3, 0.0f));
  CHECK(r.residual > kReliableResidual);
}

TEST_CASE("fit of an exact render is a fixed point of the residual") {
  ToyFaceParams p;
  p.expression.mouth_open = 0.3;
  const FitResult r = fit_params(render(p, 32));
  CHECK(r.residual < 1e-4);
}

}  // TEST_SUITE
