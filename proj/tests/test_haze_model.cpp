// Tests for the scattering model: transmission from depth, hazy synthesis,
// transmission recovery from clean/hazy pairs, and channel reduction.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <hazebayes/errors.hpp>
#include <hazebayes/haze_model.hpp>
#include <hazebayes/image.hpp>
#include <hazebayes/rng.hpp>

#include <algorithm>
#include <cmath>
#include <string>

using namespace hazebayes;

namespace {

ImageTensor random_image(int h, int w, int c, Rng& rng, double lo, double hi) {
  ImageTensor img(h, w, c);
  for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform(lo, hi);
  return img;
}

}  // namespace

TEST_CASE("transmission_from_depth computes exp(-beta*d) per pixel") {
  ImageTensor d(2, 2, 1);
  d.at(0, 0, 0) = 0.0;
  d.at(0, 1, 0) = 1.0;
  d.at(1, 0, 0) = 2.0;
  d.at(1, 1, 0) = 0.5;
  const TransmissionMap t = transmission_from_depth(DepthMap(d), 0.7);
  CHECK(t.tensor().at(0, 0, 0) == 1.0);  // exp(0) is exact
  CHECK(t.tensor().at(0, 1, 0) == doctest::Approx(std::exp(-0.7)).epsilon(1e-15));
  CHECK(t.tensor().at(1, 0, 0) == doctest::Approx(std::exp(-1.4)).epsilon(1e-15));
  CHECK(t.tensor().at(1, 1, 0) == doctest::Approx(std::exp(-0.35)).epsilon(1e-15));
}

TEST_CASE("transmission_from_depth output is always in (0, 1]") {
  Rng rng(5);
  ImageTensor d(16, 16, 1);
  for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = rng.uniform(0.0, 5.0);
  const TransmissionMap t = transmission_from_depth(DepthMap(d), 2.5);
  for (std::size_t i = 0; i < t.tensor().size(); ++i) {
    CHECK(t.tensor().data()[i] > 0.0);
    CHECK(t.tensor().data()[i] <= 1.0);
  }
  CHECK_THROWS_AS(transmission_from_depth(DepthMap(d), 0.0), ValueError);
  CHECK_THROWS_AS(transmission_from_depth(DepthMap(d), -1.0), ValueError);
}

TEST_CASE("synthesize_hazy with t = 1 returns the clean image bitwise") {
  Rng rng(17);
  const ImageTensor x = random_image(8, 6, 3, rng, 0.0, 1.0);
  const TransmissionMap t(ImageTensor::constant(8, 6, 1, 1.0));
  const ImageTensor y = synthesize_hazy(x, t, 0.85);
  for (std::size_t i = 0; i < x.size(); ++i) {
    CHECK(y.data()[i] == x.data()[i]);
  }
}

TEST_CASE("synthesize_hazy with t -> 0 approaches the airlight") {
  const ImageTensor x = ImageTensor::constant(4, 4, 3, 0.2);
  const TransmissionMap t(ImageTensor::constant(4, 4, 1, 1e-9));
  const ImageTensor y = synthesize_hazy(x, t, 0.9);
  for (std::size_t i = 0; i < y.size(); ++i) {
    CHECK(y.data()[i] == doctest::Approx(0.9).epsilon(1e-8));
  }
}

TEST_CASE("synthesized values stay between the pixel value and the airlight") {
  Rng rng(23);
  const double airlight = 0.8;
  const ImageTensor x = random_image(12, 9, 3, rng, 0.0, 1.0);
  ImageTensor tt(12, 9, 1);
  for (std::size_t i = 0; i < tt.size(); ++i) tt.data()[i] = rng.uniform(1e-6, 1.0);
  const ImageTensor y = synthesize_hazy(x, TransmissionMap(tt), airlight);
  for (int yy = 0; yy < 12; ++yy) {
    for (int xx = 0; xx < 9; ++xx) {
      for (int c = 0; c < 3; ++c) {
        const double lo = std::min(x.at(yy, xx, c), airlight);
        const double hi = std::max(x.at(yy, xx, c), airlight);
        CHECK(y.at(yy, xx, c) >= lo - 1e-15);
        CHECK(y.at(yy, xx, c) <= hi + 1e-15);
      }
    }
  }
}

TEST_CASE("1-channel transmission broadcasts; 3-channel applies per channel") {
  ImageTensor x(1, 1, 3);
  x.at(0, 0, 0) = 0.1;
  x.at(0, 0, 1) = 0.5;
  x.at(0, 0, 2) = 0.9;

  const TransmissionMap t1(ImageTensor::constant(1, 1, 1, 0.5));
  const ImageTensor y1 = synthesize_hazy(x, t1, 1.0);
  CHECK(y1.at(0, 0, 0) == doctest::Approx(0.55).epsilon(1e-15));
  CHECK(y1.at(0, 0, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(y1.at(0, 0, 2) == doctest::Approx(0.95).epsilon(1e-15));

  ImageTensor t3(1, 1, 3);
  t3.at(0, 0, 0) = 0.25;
  t3.at(0, 0, 1) = 0.5;
  t3.at(0, 0, 2) = 1.0;
  const ImageTensor y3 = synthesize_hazy(x, TransmissionMap(t3), 1.0);
  CHECK(y3.at(0, 0, 0) == doctest::Approx(0.1 * 0.25 + 0.75).epsilon(1e-15));
  CHECK(y3.at(0, 0, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(y3.at(0, 0, 2) == 0.9);
}

TEST_CASE("synthesize_hazy validates shapes and the airlight range") {
  const ImageTensor x = ImageTensor::constant(4, 4, 3, 0.5);
  const TransmissionMap t_wrong(ImageTensor::constant(4, 5, 1, 0.5));
  CHECK_THROWS_AS(synthesize_hazy(x, t_wrong, 0.9), ShapeError);
  // A two-channel transmission map is unrepresentable: the tensor type
  // itself rejects that channel count at construction.
  CHECK_THROWS_AS(ImageTensor::constant(4, 4, 2, 0.5), ValueError);
  const TransmissionMap t(ImageTensor::constant(4, 4, 1, 0.5));
  CHECK_THROWS_AS(synthesize_hazy(x, t, 0.0), ValueError);
  CHECK_THROWS_AS(synthesize_hazy(x, t, 1.5), ValueError);
}

TEST_CASE("log-transmission recovery inverts synthesis to high accuracy") {
  // Keep |x - A| comfortably above the guard and t above the recovery floor
  // (beta * depth <= 6.9 keeps t >= ~1e-3 > 1e-4).
  Rng rng(71);
  const double airlight = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ImageTensor x = random_image(8, 8, 3, rng, 0.05, 0.8);
    ImageTensor d(8, 8, 1);
    for (std::size_t i = 0; i < d.size(); ++i) d.data()[i] = rng.uniform(0.0, 6.9);
    const TransmissionMap t = transmission_from_depth(DepthMap(d), 1.0);
    const ImageTensor y = synthesize_hazy(x, t, airlight);
    const ImageTensor log_t = log_transmission_from_pair(y, x, airlight);
    REQUIRE(log_t.channels() == 1);
    double max_err = 0.0;
    for (std::size_t i = 0; i < log_t.size(); ++i) {
      max_err = std::max(max_err,
                         std::abs(std::exp(log_t.data()[i]) - t.tensor().data()[i]));
    }
    CHECK(max_err < 1e-9);
  }
}

TEST_CASE("recovery averages channel log-ratios for color input") {
  // Per-channel transmissions differ, so the recovered single channel must
  // equal the mean of the three log-ratios.
  ImageTensor x(1, 1, 3);
  x.at(0, 0, 0) = 0.2;
  x.at(0, 0, 1) = 0.3;
  x.at(0, 0, 2) = 0.4;
  ImageTensor t3(1, 1, 3);
  t3.at(0, 0, 0) = 0.5;
  t3.at(0, 0, 1) = 0.6;
  t3.at(0, 0, 2) = 0.7;
  const double airlight = 0.95;
  const ImageTensor y = synthesize_hazy(x, TransmissionMap(t3), airlight);
  const ImageTensor log_t = log_transmission_from_pair(y, x, airlight);
  const double expected = (std::log(0.5) + std::log(0.6) + std::log(0.7)) / 3.0;
  CHECK(log_t.at(0, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("recovery clamps to the [1e-4, 1] transmission window") {
  // t far below the floor: recovered log must clamp at log(1e-4).
  const ImageTensor x = ImageTensor::constant(2, 2, 3, 0.2);
  const TransmissionMap t_tiny(ImageTensor::constant(2, 2, 1, 1e-7));
  const ImageTensor y = synthesize_hazy(x, t_tiny, 0.9);
  const ImageTensor log_t = log_transmission_from_pair(y, x, 0.9);
  for (std::size_t i = 0; i < log_t.size(); ++i) {
    CHECK(log_t.data()[i] == std::log(1e-4));
  }
  // Upper end: y == x means t = 1, so log t = 0 and never positive.
  const ImageTensor log_one = log_transmission_from_pair(x, x, 0.9);
  for (std::size_t i = 0; i < log_one.size(); ++i) {
    CHECK(log_one.data()[i] == 0.0);
  }
}

TEST_CASE("recovery reports the failing pixel when the denominator vanishes") {
  ImageTensor x = ImageTensor::constant(3, 3, 3, 0.3);
  // Pixel (1, 2) sits exactly at the airlight: |x - A| = 0 < guard.
  x.at(1, 2, 0) = 0.9;
  x.at(1, 2, 1) = 0.9;
  x.at(1, 2, 2) = 0.9;
  const TransmissionMap t(ImageTensor::constant(3, 3, 1, 0.5));
  const ImageTensor y = synthesize_hazy(x, t, 0.9);
  try {
    log_transmission_from_pair(y, x, 0.9);
    FAIL("expected ValueError");
  } catch (const ValueError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1, 2)") != std::string::npos);
  }
}

TEST_CASE("recovery rejects nonpositive ratios and bad guards") {
  const ImageTensor x = ImageTensor::constant(2, 2, 3, 0.2);
  // y on the opposite side of A from x makes the ratio negative.
  const ImageTensor y = ImageTensor::constant(2, 2, 3, 0.95);
  CHECK_THROWS_AS(log_transmission_from_pair(y, x, 0.9), ValueError);
  CHECK_THROWS_AS(log_transmission_from_pair(x, x, 0.9, 0.0), ValueError);
  const ImageTensor wrong = ImageTensor::constant(2, 3, 3, 0.2);
  CHECK_THROWS_AS(log_transmission_from_pair(wrong, x, 0.9), ShapeError);
}

TEST_CASE("per-channel recovery under unit airlight clamps into [t_floor, 1]") {
  Rng rng(311);
  const ImageTensor x = random_image(6, 6, 3, rng, 0.0, 0.95);
  ImageTensor tt(6, 6, 1);
  for (std::size_t i = 0; i < tt.size(); ++i) tt.data()[i] = rng.uniform(0.01, 1.0);
  const ImageTensor y = synthesize_hazy(x, TransmissionMap(tt), 1.0);
  const TransmissionMap rec = transmission_from_pair_nh(y, x);
  REQUIRE(rec.channels() == 3);
  for (std::size_t i = 0; i < rec.tensor().size(); ++i) {
    CHECK(rec.tensor().data()[i] >= 0.05);
    CHECK(rec.tensor().data()[i] <= 1.0);
  }
  // Where the true t is above the floor and x is away from 1, the recovery
  // is close to the truth.
  for (int yy = 0; yy < 6; ++yy) {
    for (int xx = 0; xx < 6; ++xx) {
      const double t_true = tt.at(yy, xx, 0);
      if (t_true < 0.06) continue;
      for (int c = 0; c < 3; ++c) {
        if (x.at(yy, xx, c) > 0.9) continue;
        CHECK(rec.tensor().at(yy, xx, c) == doctest::Approx(t_true).epsilon(1e-3));
      }
    }
  }
}

TEST_CASE("per-channel recovery turns 0/0 sites into the floor, not NaN") {
  // y = 1 and x = 1 - eps gives numerator 0 and denominator 0 exactly.
  const double eps = 1e-6;
  ImageTensor x(1, 1, 1);
  x.at(0, 0, 0) = 1.0 - eps;
  ImageTensor y(1, 1, 1);
  y.at(0, 0, 0) = 1.0;
  const TransmissionMap rec = transmission_from_pair_nh(y, x, eps, 0.05);
  CHECK(rec.tensor().at(0, 0, 0) == 0.05);
  CHECK(std::isfinite(rec.tensor().at(0, 0, 0)));
}

TEST_CASE("reduce_transmission takes the geometric mean across channels") {
  ImageTensor t3(2, 1, 3);
  t3.at(0, 0, 0) = 0.2;
  t3.at(0, 0, 1) = 0.4;
  t3.at(0, 0, 2) = 0.8;
  t3.at(1, 0, 0) = 1.0;
  t3.at(1, 0, 1) = 1.0;
  t3.at(1, 0, 2) = 1.0;
  const TransmissionMap r = reduce_transmission(TransmissionMap(t3));
  REQUIRE(r.channels() == 1);
  const double gm = std::exp((std::log(0.2) + std::log(0.4) + std::log(0.8)) / 3.0);
  CHECK(r.tensor().at(0, 0, 0) == doctest::Approx(gm).epsilon(1e-15));
  CHECK(r.tensor().at(1, 0, 0) == 1.0);

  // Geometric mean of equal values is that value.
  const TransmissionMap eq(ImageTensor::constant(3, 3, 3, 0.37));
  const TransmissionMap req = reduce_transmission(eq);
  for (std::size_t i = 0; i < req.tensor().size(); ++i) {
    CHECK(req.tensor().data()[i] == doctest::Approx(0.37).epsilon(1e-15));
  }
}

TEST_CASE("reduce_transmission is the identity for 1-channel maps") {
  Rng rng(9);
  ImageTensor t1(4, 5, 1);
  for (std::size_t i = 0; i < t1.size(); ++i) t1.data()[i] = rng.uniform(0.01, 1.0);
  const TransmissionMap in(t1);
  const TransmissionMap out = reduce_transmission(in);
  REQUIRE(out.channels() == 1);
  for (std::size_t i = 0; i < t1.size(); ++i) {
    CHECK(out.tensor().data()[i] == t1.data()[i]);
  }
}

TEST_CASE("ScatterParams::validate rejects out-of-range parameters") {
  ScatterParams ok;
  CHECK_NOTHROW(ok.validate());
  ScatterParams bad_beta;
  bad_beta.beta = 0.0;
  CHECK_THROWS_AS(bad_beta.validate(), ValueError);
  ScatterParams bad_a;
  bad_a.airlight = 0.0;
  CHECK_THROWS_AS(bad_a.validate(), ValueError);
  bad_a.airlight = 1.2;
  CHECK_THROWS_AS(bad_a.validate(), ValueError);
}
