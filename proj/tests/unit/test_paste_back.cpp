#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "reenact/editing/paste_back.hpp"
#include "reenact/errors.hpp"

using namespace reenact;
using namespace reenact::editing;

TEST_SUITE("paste_back") {

TEST_CASE("zero feather hard-pastes the crop") {
  Image frame(20, 30, 3, 0.1f);
  Image crop(8, 6, 3, 0.9f);
  const CropBox box{5, 4, 6, 8};
  const Image out = paste_back(frame, box, crop, 0.0);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x) {
      const bool in = x >= 5 && x < 11 && y >= 4 && y < 12;
      CHECK(out.at(y, x, 1) == (in ? 0.9f : 0.1f));
    }
}

TEST_CASE("pasting the frame's own crop is the identity") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image frame(24, 24, 3);
  for (float& p : frame.pixels()) p = u(rng);
  const CropBox box{3, 2, 16, 16};
  Image crop(16, 16, 3);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x)
      for (int c = 0; c < 3; ++c) crop.at(y, x, c) = frame.at(y + 2, x + 3, c);
  const Image out = paste_back(frame, box, crop, 1.5);
  for (std::size_t i = 0; i < frame.size(); ++i) CHECK(out.pixels()[i] == doctest::Approx(frame.pixels()[i]).epsilon(1e-6));
}

TEST_CASE("feather weights match the 2-D convolution oracle") {
  for (double sigma : {0.0, 0.7, 1.0, 2.5}) {
    const auto got = feather_alpha(40, 33, sigma);
    const auto want = test::oracle_feather(40, 33, sigma);
    double worst = 0.0;
    for (std::size_t i = 0; i < got.size(); ++i) worst = std::max(worst, std::abs(got[i] - want[i]));
    INFO("sigma " << sigma);
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("feathered blend is a convex combination") {
  Image frame(32, 32, 3, 0.0f), crop(20, 20, 3, 1.0f);
  const Image out = paste_back(frame, CropBox{6, 6, 20, 20}, crop, 1.0);
  const auto alpha = feather_alpha(20, 20, 1.0);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 20; ++x) CHECK(out.at(6 + y, 6 + x, 0) == doctest::Approx(alpha[y * 20 + x]).epsilon(1e-6));
  CHECK(out.at(16, 16, 0) == 1.0f);
  CHECK(out.at(6, 6, 0) < 0.05f);
}

TEST_CASE("paste_back argument errors") {
  const Image frame(16, 16, 3), crop(8, 8, 3);
  CHECK_THROWS_AS(paste_back(frame, CropBox{10, 0, 8, 8}, crop, 0.0), ArgumentError);
  CHECK_THROWS_AS(paste_back(frame, CropBox{0, 0, 8, 7}, crop, 0.0), ArgumentError);
  CHECK_THROWS_AS(paste_back(frame, CropBox{0, 0, 8, 8}, crop, -1.0), ArgumentError);
}

}  // TEST_SUITE
