#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <vector>

#include "hazebayes/errors.hpp"
#include "hazebayes/image.hpp"
#include "hazebayes/rng.hpp"

using namespace hazebayes;

namespace {

// Brute-force sliding minimum with replicate padding, kept deliberately
// naive so it can stand as an oracle for the production implementation.
ImageTensor min_filter_naive(const ImageTensor& t, int window) {
  const int r = window / 2;
  ImageTensor out(t.height(), t.width(), 1);
  for (int y = 0; y < t.height(); ++y) {
    for (int x = 0; x < t.width(); ++x) {
      double m = std::numeric_limits<double>::infinity();
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int yy = std::min(t.height() - 1, std::max(0, y + dy));
          const int xx = std::min(t.width() - 1, std::max(0, x + dx));
          m = std::min(m, t.at(yy, xx, 0));
        }
      }
      out.at(y, x, 0) = m;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("image tensor indexing is row-major and channel-interleaved") {
  ImageTensor t(2, 3, 3);
  t.at(1, 2, 0) = 0.25;
  t.at(1, 2, 2) = 0.75;
  CHECK(t.data()[(1 * 3 + 2) * 3 + 0] == 0.25);
  CHECK(t.data()[(1 * 3 + 2) * 3 + 2] == 0.75);
  CHECK(t.size() == 18);
  CHECK(t.pixels() == 6);
}

TEST_CASE("image tensor rejects non-positive dims and non-finite data") {
  CHECK_THROWS_AS(ImageTensor(0, 3, 1), ValueError);
  CHECK_THROWS_AS(ImageTensor(3, -1, 1), ValueError);
  CHECK_THROWS_AS(ImageTensor(1, 1, 0), ValueError);
  CHECK_THROWS_AS(
      ImageTensor(1, 1, 1, {std::numeric_limits<double>::quiet_NaN()}),
      ValueError);
  CHECK_THROWS_AS(
      ImageTensor(1, 1, 1, {std::numeric_limits<double>::infinity()}),
      ValueError);
  CHECK_THROWS_AS(ImageTensor(2, 2, 1, {0.0, 0.0, 0.0}), ShapeError);
}

TEST_CASE("from_u8 scales into the unit interval") {
  const ImageTensor t = ImageTensor::from_u8(1, 2, 1, {0, 255});
  CHECK(t.at(0, 0, 0) == 0.0);
  CHECK(t.at(0, 1, 0) == 1.0);
}

TEST_CASE("constant fill") {
  const ImageTensor t = ImageTensor::constant(2, 2, 3, 0.5);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.data()[i] == 0.5);
}

TEST_CASE("transmission map enforces the half-open unit interval") {
  CHECK_NOTHROW(TransmissionMap(ImageTensor(1, 1, 1, {1.0})));
  CHECK_NOTHROW(TransmissionMap(ImageTensor(1, 1, 1, {1e-9})));
  CHECK_THROWS_AS(TransmissionMap(ImageTensor(1, 1, 1, {0.0})), ValueError);
  CHECK_THROWS_AS(TransmissionMap(ImageTensor(1, 1, 1, {1.0 + 1e-12})), ValueError);
  CHECK_THROWS_AS(TransmissionMap(ImageTensor(1, 1, 1, {-0.5})), ValueError);
  CHECK_THROWS_AS(TransmissionMap(ImageTensor(1, 1, 2, {0.5, 0.5})), ValueError);
}

TEST_CASE("depth map requires one nonnegative channel") {
  CHECK_NOTHROW(DepthMap(ImageTensor(1, 2, 1, {0.0, 5.0})));
  CHECK_THROWS_AS(DepthMap(ImageTensor(1, 1, 1, {-0.1})), ValueError);
  CHECK_THROWS_AS(DepthMap(ImageTensor(1, 1, 3, {1.0, 1.0, 1.0})), ShapeError);
}

TEST_CASE("min filter matches the brute-force oracle on random maps") {
  Rng rng(41);
  for (const int window : {1, 3, 5, 9}) {
    ImageTensor t(11, 7, 1);
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform();
    const ImageTensor got = min_filter(t, window);
    const ImageTensor want = min_filter_naive(t, window);
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got.data()[i] == want.data()[i]);
    }
  }
}

TEST_CASE("min filter window must be odd and positive, input single-channel") {
  ImageTensor t(4, 4, 1);
  CHECK_THROWS_AS(min_filter(t, 2), ValueError);
  CHECK_THROWS_AS(min_filter(t, -3), ValueError);
  CHECK_THROWS_AS(min_filter(ImageTensor(2, 2, 3), 3), ShapeError);
}

TEST_CASE("min filter window larger than the image still replicates edges") {
  ImageTensor t(2, 2, 1, {0.4, 0.3, 0.2, 0.1});
  const ImageTensor got = min_filter(t, 7);
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got.data()[i] == 0.1);
}
