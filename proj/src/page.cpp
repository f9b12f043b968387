#include "idio/page.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace idio {

const char* style_name(Style s) {
  switch (s) {
    case Style::slow: return "slow";
    case Style::medium: return "medium";
    case Style::fast: return "fast";
  }
  return "?";
}

Style style_from_name(const std::string& name) {
  if (name == "slow") return Style::slow;
  if (name == "medium") return Style::medium;
  if (name == "fast") return Style::fast;
  throw std::invalid_argument("unknown style: " + name);
}

double normalize_opinion_scores(const OpinionScoreSet& s) {
  if (s.raw_scores.empty()) throw std::invalid_argument("no opinions");
  if (s.lo >= s.hi) throw std::invalid_argument("degenerate range");
  double mean = 0.0;
  for (double v : s.raw_scores) mean += v;
  mean /= static_cast<double>(s.raw_scores.size());
  return (mean - s.lo) / (s.hi - s.lo);
}

double ground_truth_score(const PageSample& page, NormLocation loc, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
  double best = 0.0;
  for (const auto& g : page.planted) {
    const double dx = loc.x - g.center.x;
    const double dy = loc.y - g.center.y;
    const double v = g.rarity * std::exp(-(dx * dx + dy * dy) / (sigma * sigma));
    best = std::max(best, v);
  }
  return std::clamp(best, 0.0, 1.0);
}

std::size_t loc_to_pixel(double v, std::size_t dim) {
  if (dim <= 1) return 0;
  const long p = std::lround(v * static_cast<double>(dim - 1));
  return static_cast<std::size_t>(std::clamp<long>(p, 0, static_cast<long>(dim - 1)));
}

double pixel_to_loc(std::size_t p, std::size_t dim) {
  if (dim <= 1) return 0.0;
  return static_cast<double>(p) / static_cast<double>(dim - 1);
}

namespace {

// Top-left corner of the clamped side-window with its center pixel (the SE
// central pixel for even sides) at the mapped location.
std::pair<std::size_t, std::size_t> window_origin(const PageSample& page,
                                                  NormLocation center,
                                                  std::size_t side) {
  const std::size_t h = page.pixels.height;
  const std::size_t w = page.pixels.width;
  if (side > h || side > w)
    throw std::invalid_argument("patch side exceeds page dimension");
  const long cr = static_cast<long>(loc_to_pixel(center.y, h));
  const long cc = static_cast<long>(loc_to_pixel(center.x, w));
  const long half = static_cast<long>(side / 2);
  const long r0 = std::clamp<long>(cr - half, 0, static_cast<long>(h - side));
  const long c0 = std::clamp<long>(cc - half, 0, static_cast<long>(w - side));
  return {static_cast<std::size_t>(r0), static_cast<std::size_t>(c0)};
}

Patch copy_window(const PageSample& page, std::size_t r0, std::size_t c0,
                  std::size_t side, NormLocation center) {
  Patch p;
  p.pixels = Image(side, side);
  for (std::size_t r = 0; r < side; ++r)
    for (std::size_t c = 0; c < side; ++c)
      p.pixels.at(r, c) = page.pixels.at(r0 + r, c0 + c);
  p.center = center;
  return p;
}

}  // namespace

Patch extract_patch(const PageSample& page, NormLocation center, std::size_t side) {
  const auto [r0, c0] = window_origin(page, center, side);
  return copy_window(page, r0, c0, side, center);
}

BoundingBox patch_box(const PageSample& page, NormLocation center, std::size_t side) {
  const auto [r0, c0] = window_origin(page, center, side);
  BoundingBox box;
  box.min_x = static_cast<double>(c0);
  box.min_y = static_cast<double>(r0);
  box.max_x = static_cast<double>(c0 + side);
  box.max_y = static_cast<double>(r0 + side);
  return box;
}

Patch pad_patch(const Patch& p, std::size_t target, const PageSample& page) {
  const std::size_t side = p.side();
  if (target < side) throw std::invalid_argument("pad target smaller than patch");
  if (target == side) return p;

  const std::size_t west = (target - side) / 2;
  const std::size_t north = west;

  const auto [r0, c0] = window_origin(page, p.center, side);
  const long h = static_cast<long>(page.pixels.height);
  const long w = static_cast<long>(page.pixels.width);

  Patch out;
  out.pixels = Image(target, target);
  out.center = p.center;
  out.actual_score = p.actual_score;
  for (std::size_t r = 0; r < target; ++r) {
    for (std::size_t c = 0; c < target; ++c) {
      long pr = static_cast<long>(r0) + static_cast<long>(r) - static_cast<long>(north);
      long pc = static_cast<long>(c0) + static_cast<long>(c) - static_cast<long>(west);
      pr = std::clamp<long>(pr, 0, h - 1);
      pc = std::clamp<long>(pc, 0, w - 1);
      out.pixels.at(r, c) = page.pixels.at(static_cast<std::size_t>(pr),
                                           static_cast<std::size_t>(pc));
    }
  }
  return out;
}

std::vector<Patch> slide_windows(const PageSample& page, std::size_t side,
                                 std::size_t stride) {
  if (stride < 1) throw std::invalid_argument("stride must be >= 1");
  const std::size_t h = page.pixels.height;
  const std::size_t w = page.pixels.width;
  if (side > h || side > w)
    throw std::invalid_argument("patch side exceeds page dimension");

  auto offsets = [&](std::size_t dim) {
    const std::size_t q = (dim - side) / stride;
    std::vector<std::size_t> off(q + 1);
    for (std::size_t i = 0; i <= q; ++i) off[i] = i * stride;
    off.back() = dim - side;
    return off;
  };

  const auto row_off = offsets(h);
  const auto col_off = offsets(w);
  std::vector<Patch> out;
  out.reserve(row_off.size() * col_off.size());
  for (std::size_t r0 : row_off) {
    for (std::size_t c0 : col_off) {
      NormLocation center{pixel_to_loc(c0 + side / 2, w),
                          pixel_to_loc(r0 + side / 2, h)};
      out.push_back(copy_window(page, r0, c0, side, center));
    }
  }
  return out;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (a.min_x > a.max_x || a.min_y > a.max_y || b.min_x > b.max_x ||
      b.min_y > b.max_y)
    throw std::invalid_argument("invalid bounding box");
  const double ix = std::max(0.0, std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x));
  const double iy = std::max(0.0, std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y));
  const double inter = ix * iy;
  const double area_a = (a.max_x - a.min_x) * (a.max_y - a.min_y);
  const double area_b = (b.max_x - b.min_x) * (b.max_y - b.min_y);
  const double uni = area_a + area_b - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

}  // namespace idio
