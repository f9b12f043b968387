#pragma once
// Synthetic handwriting corpus: per-writer procedural glyph alphabets drawn
// as polyline strokes, style-dependent rendering jitter, planted idiosyncratic
// glyphs with analytic rarity ground truth, drop-stroke augmentation, and
// 2:1:1 per-(writer,style) splits.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "idio/page.hpp"

namespace idio {

struct CorpusConfig {
  int n_writers = 10;
  int pages_per_writer_per_style = 8;
  int glyphs_per_writer = 12;
  int idiosyncratic_glyphs_per_writer = 3;
  std::size_t page_height = 256;
  std::size_t page_width = 256;
  std::uint64_t rng_seed = 1;
  double score_kernel_width = 0.05;  // sigma of the ground-truth kernel
};

// Identical config -> byte-identical corpus.
std::vector<PageSample> generate_synthetic_corpus(const CorpusConfig& cfg);

// n_aug re-rendered pages, each omitting a random drop_fraction of strokes.
// Planted glyphs whose strokes are all dropped disappear from the labels.
// Throws "no stroke provenance" for raster-only pages.
std::vector<PageSample> drop_stroke_augment(const PageSample& page, int n_aug,
                                            double drop_fraction,
                                            std::uint64_t seed);

enum class SplitPart { train, val, test, none };
const char* split_name(SplitPart p);
SplitPart split_from_name(const std::string& name);

// Base-page id for a (possibly augmented) sample id: strips a trailing
// "_a<digits>" suffix.
std::string origin_of(const std::string& sample_id);

// 2:1:1 per (writer, style) cell over origin groups (a base page and its
// augments stay in one part). Deterministic under the seed; the three parts
// partition the corpus.
std::map<std::string, SplitPart> split_corpus(const std::vector<PageSample>& corpus,
                                              std::uint64_t seed);

void rasterize_strokes(Image& img, const std::vector<StrokeRecord>& strokes);

// --- files -----------------------------------------------------------------

void write_pgm(const std::string& path, const Image& img);
Image read_pgm(const std::string& path);

struct ManifestEntry {
  std::string id;
  int writer_id = -1;
  Style style = Style::medium;
  std::string path;
  SplitPart split = SplitPart::none;
};

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries);
std::vector<ManifestEntry> read_manifest(const std::string& path);

// Opinion-score records: `sample_id, x, y, score_1..score_e` per line, raw
// scores in [0,10]. The synthetic corpus writes its analytic oracle as a
// single expert (e = 1) with raw score = rarity * 10.
void write_scores(const std::string& path, const std::vector<PageSample>& corpus);
// sample id -> planted glyphs, scores normalized through the opinion pathway.
std::map<std::string, std::vector<PlantedGlyph>> read_scores(const std::string& path);

// Writes pages/<id>.pgm, manifest.csv and scores.csv under dir.
void save_corpus(const std::string& dir, const std::vector<PageSample>& corpus,
                 const std::map<std::string, SplitPart>& split);

struct LoadedCorpus {
  std::vector<PageSample> pages;  // raster + planted labels, no strokes
  std::map<std::string, SplitPart> split;
};

LoadedCorpus load_corpus(const std::string& dir);

}  // namespace idio
