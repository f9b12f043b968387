#pragma once
// Page/patch data model and coordinate conventions. Normalized locations put
// (0,0) at the page top-left and (1,1) at the bottom-right; for even window
// sides the center pixel is the south-east one of the four central pixels.

#include <optional>
#include <string>
#include <vector>

namespace idio {

struct NormLocation {
  double x = 0.0;
  double y = 0.0;
};

// Grayscale raster, ink intensity in [0,1] (0 = blank paper).
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;  // row-major

  Image() = default;
  Image(std::size_t h, std::size_t w) : height(h), width(w), pixels(h * w, 0.0) {}
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }
  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
};

enum class Style { slow, medium, fast };

const char* style_name(Style s);
Style style_from_name(const std::string& name);
inline constexpr Style kAllStyles[] = {Style::slow, Style::medium, Style::fast};

struct PlantedGlyph {
  NormLocation center;
  double rarity = 0.0;  // in [0,1]
};

// Vector-stroke provenance kept by synthetic pages so augmentation can
// re-render; raster-only pages have none.
struct StrokeRecord {
  std::vector<std::pair<double, double>> points;  // (col,row) page pixel coords
  double radius = 1.0;
  int planted_index = -1;  // index into PageSample::planted, -1 for common ink
};

struct PageSample {
  std::string id;
  int writer_id = -1;
  Style style = Style::medium;
  Image pixels;
  std::vector<PlantedGlyph> planted;
  std::vector<StrokeRecord> strokes;

  bool has_strokes() const { return !strokes.empty(); }
};

struct Patch {
  Image pixels;  // side x side
  NormLocation center;
  std::optional<double> actual_score;

  std::size_t side() const { return pixels.height; }
};

struct OpinionScoreSet {
  std::vector<double> raw_scores;
  double lo = 0.0;   // I_L
  double hi = 10.0;  // I_H
};

// Axis-aligned box in continuous pixel coordinates, min <= max componentwise.
struct BoundingBox {
  double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;
};

// (mean(raw) - lo) / (hi - lo). Throws on empty scores or lo >= hi.
double normalize_opinion_scores(const OpinionScoreSet& s);

// max over planted glyphs of rarity * exp(-dist^2 / sigma^2) in normalized
// coordinates, clipped to [0,1]; 0 for a page with no planted glyphs.
double ground_truth_score(const PageSample& page, NormLocation loc, double sigma);

// Pixel mapping for normalized coordinates.
std::size_t loc_to_pixel(double v, std::size_t dim);
double pixel_to_loc(std::size_t p, std::size_t dim);

// Window of side x side around `center`; windows crossing a border are
// clamped inside the page, the recorded center stays as requested.
Patch extract_patch(const PageSample& page, NormLocation center, std::size_t side);

// The clamped pixel box extract_patch would read for this center/side.
BoundingBox patch_box(const PageSample& page, NormLocation center, std::size_t side);

// Pads to target x target: floor((target-side)/2) west/north and the ceil on
// east/south, filled from the page where available, else edge-replicated.
Patch pad_patch(const Patch& p, std::size_t target, const PageSample& page);

// Row-major grid at offsets {0, stride, ...}; the last window per axis is
// shifted flush with the border. Count per axis: floor((dim-side)/stride)+1.
std::vector<Patch> slide_windows(const PageSample& page, std::size_t side,
                                 std::size_t stride);

double iou(const BoundingBox& a, const BoundingBox& b);

}  // namespace idio
