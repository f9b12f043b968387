#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "idio/page.hpp"
#include "idio/rng.hpp"

using namespace idio;

namespace {

PageSample blank_page(std::size_t h, std::size_t w) {
  PageSample page;
  page.pixels = Image(h, w);
  return page;
}

PageSample numbered_page(std::size_t h, std::size_t w) {
  PageSample page = blank_page(h, w);
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      page.pixels.at(r, c) = static_cast<double>(r * w + c);
  return page;
}

}  // namespace

TEST_CASE("normalize_opinion_scores: mean and range normalization") {
  OpinionScoreSet s;
  s.raw_scores.assign(30, 7.5);
  s.lo = 0.0;
  s.hi = 10.0;
  CHECK(normalize_opinion_scores(s) == doctest::Approx(0.75));

  s.raw_scores = {0.0, 0.0, 0.0};
  CHECK(normalize_opinion_scores(s) == doctest::Approx(0.0));

  s.raw_scores = {10.0, 10.0};
  CHECK(normalize_opinion_scores(s) == doctest::Approx(1.0));
}

TEST_CASE("normalize_opinion_scores: error cases") {
  OpinionScoreSet s;
  s.lo = 0;
  s.hi = 10;
  CHECK_THROWS_WITH_AS(normalize_opinion_scores(s), "no opinions",
                       std::invalid_argument);
  s.raw_scores = {5.0};
  s.lo = 10;
  s.hi = 10;
  CHECK_THROWS_WITH_AS(normalize_opinion_scores(s), "degenerate range",
                       std::invalid_argument);
}

TEST_CASE("normalize_opinion_scores is affine-invariant under a common shift") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    OpinionScoreSet s;
    const std::size_t e = 2 + rng.uniform_index(20);
    s.lo = rng.uniform(0, 2);
    s.hi = s.lo + rng.uniform(1, 10);
    for (std::size_t i = 0; i < e; ++i)
      s.raw_scores.push_back(rng.uniform(s.lo, s.hi));
    const double base = normalize_opinion_scores(s);

    const double c = rng.uniform(-5, 5);
    OpinionScoreSet shifted = s;
    shifted.lo += c;
    shifted.hi += c;
    for (double& v : shifted.raw_scores) v += c;
    CHECK(normalize_opinion_scores(shifted) == doctest::Approx(base).epsilon(1e-9));
  }
}

TEST_CASE("ground_truth_score: planted kernel values") {
  PageSample page = blank_page(64, 64);
  page.planted.push_back({{0.3, 0.4}, 0.9});

  CHECK(ground_truth_score(page, {0.3, 0.4}, 0.05) == doctest::Approx(0.9));

  PageSample empty = blank_page(64, 64);
  CHECK(ground_truth_score(empty, {0.5, 0.5}, 0.05) == doctest::Approx(0.0));

  PageSample unit = blank_page(64, 64);
  unit.planted.push_back({{0.5, 0.5}, 1.0});
  const double sigma = 0.05;
  // at distance exactly sigma the kernel is exp(-1)
  CHECK(ground_truth_score(unit, {0.5 + sigma, 0.5}, sigma) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(std::exp(-1.0) == doctest::Approx(0.3679).epsilon(1e-4));
}

TEST_CASE("ground_truth_score attains its maximum at a planted center") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    PageSample page = blank_page(32, 32);
    const int n = 1 + static_cast<int>(rng.uniform_index(4));
    for (int g = 0; g < n; ++g)
      page.planted.push_back({{rng.uniform(), rng.uniform()},
                              rng.uniform(0.2, 1.0)});
    double best_grid = 0.0;
    for (int gy = 0; gy <= 20; ++gy)
      for (int gx = 0; gx <= 20; ++gx)
        best_grid = std::max(best_grid,
                             ground_truth_score(page, {gx / 20.0, gy / 20.0}, 0.05));
    double best_center = 0.0;
    for (const auto& g : page.planted)
      best_center = std::max(best_center, ground_truth_score(page, g.center, 0.05));
    CHECK(best_center >= best_grid - 1e-12);
  }
}

TEST_CASE("extract_patch: south-east center convention on a 4x4 page") {
  PageSample page = numbered_page(4, 4);
  Patch p = extract_patch(page, {0.5, 0.5}, 2);
  // SE central pixel at (2,2): window rows 1-2, cols 1-2
  CHECK(p.pixels.at(0, 0) == doctest::Approx(1 * 4 + 1));
  CHECK(p.pixels.at(0, 1) == doctest::Approx(1 * 4 + 2));
  CHECK(p.pixels.at(1, 0) == doctest::Approx(2 * 4 + 1));
  CHECK(p.pixels.at(1, 1) == doctest::Approx(2 * 4 + 2));
  CHECK(p.center.x == doctest::Approx(0.5));
}

TEST_CASE("extract_patch: border clamping") {
  PageSample page4 = numbered_page(4, 4);
  Patch whole = extract_patch(page4, {0.0, 0.0}, 4);
  CHECK(whole.pixels.at(0, 0) == doctest::Approx(0.0));
  CHECK(whole.pixels.at(3, 3) == doctest::Approx(15.0));

  PageSample page100 = numbered_page(100, 100);
  Patch corner = extract_patch(page100, {1.0, 1.0}, 2);
  CHECK(corner.pixels.at(0, 0) == doctest::Approx(98 * 100 + 98));
  CHECK(corner.pixels.at(1, 1) == doctest::Approx(99 * 100 + 99));

  CHECK_THROWS_AS(extract_patch(page4, {0.5, 0.5}, 5), std::invalid_argument);
}

TEST_CASE("pad_patch widths: floor west/north, ceil east/south") {
  // 224 -> 299 pads (37, 37, 38, 38); verified via the window position.
  PageSample page = numbered_page(400, 400);
  Patch p = extract_patch(page, {0.5, 0.5}, 224);
  Patch padded = pad_patch(p, 299, page);
  CHECK(padded.pixels.height == 299);
  // center pixel (200,200) => patch rows 88..311, padded starts 37 earlier
  CHECK(padded.pixels.at(0, 0) == doctest::Approx((88.0 - 37) * 400 + (88 - 37)));

  Patch same = pad_patch(p, 224, page);
  CHECK(same.pixels.pixels == p.pixels.pixels);

  // 32 -> 41 pads (4, 4, 5, 5)
  Patch p32 = extract_patch(page, {0.5, 0.5}, 32);
  Patch p41 = pad_patch(p32, 41, page);
  // patch rows 184..215 => padded rows start at 180
  CHECK(p41.pixels.at(0, 0) == doctest::Approx(180.0 * 400 + 180));
  CHECK(p41.pixels.at(40, 40) == doctest::Approx(220.0 * 400 + 220));
}

TEST_CASE("pad_patch then center-crop is the identity on pixels") {
  Rng rng(12);
  PageSample page = blank_page(60, 60);
  for (double& v : page.pixels.pixels) v = rng.uniform();
  for (int trial = 0; trial < 20; ++trial) {
    NormLocation loc{rng.uniform(), rng.uniform()};
    Patch p = extract_patch(page, loc, 16);
    Patch padded = pad_patch(p, 23, page);
    const std::size_t west = (23 - 16) / 2;
    for (std::size_t r = 0; r < 16; ++r)
      for (std::size_t c = 0; c < 16; ++c)
        CHECK(padded.pixels.at(r + west, c + west) ==
              doctest::Approx(p.pixels.at(r, c)));
  }
}

TEST_CASE("pad_patch replicates edges outside the page") {
  PageSample page = numbered_page(10, 10);
  Patch corner = extract_patch(page, {0.0, 0.0}, 4);  // rows 0..3
  Patch padded = pad_patch(corner, 8, page);          // west/north pad 2
  // outside rows/cols clamp to the page edge
  CHECK(padded.pixels.at(0, 0) == doctest::Approx(0.0));
  CHECK(padded.pixels.at(0, 3) == doctest::Approx(1.0));
}

TEST_CASE("slide_windows counts follow the floor formula") {
  CHECK(slide_windows(blank_page(416, 416), 224, 96).size() == 9);
  CHECK(slide_windows(blank_page(224, 224), 224, 224).size() == 1);
  CHECK(slide_windows(blank_page(100, 100), 32, 32).size() == 9);
  CHECK_THROWS_AS(slide_windows(blank_page(20, 20), 32, 8), std::invalid_argument);
}

TEST_CASE("slide_windows: last window touches the border") {
  PageSample page = numbered_page(100, 100);
  auto windows = slide_windows(page, 32, 32);
  REQUIRE(windows.size() == 9);
  const Patch& last = windows.back();
  // last window must cover rows/cols 68..99
  CHECK(last.pixels.at(31, 31) == doctest::Approx(99.0 * 100 + 99));
}

TEST_CASE("iou: identical, disjoint and half-overlapping boxes") {
  BoundingBox a{0, 0, 1, 1};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  BoundingBox b{2, 2, 3, 3};
  CHECK(iou(a, b) == doctest::Approx(0.0));
  BoundingBox c{0.5, 0, 1.5, 1};
  CHECK(iou(a, c) == doctest::Approx(1.0 / 3.0));
}
