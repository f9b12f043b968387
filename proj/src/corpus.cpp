#include "idio/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "idio/rng.hpp"

namespace idio {
namespace {

// Rendering geometry (page pixels).
constexpr double kMargin = 18.0;
constexpr double kCell = 24.0;
constexpr int kCommonBankSize = 24;

// Style analogs: slant/thickness/jitter triples standing in for writing speed.
struct StyleParams {
  double slant;       // shear of the glyph vertical
  double radius;      // stroke thickness
  double pos_jitter;  // cell-relative placement noise
  double size_jitter;
  double rot_jitter;  // radians
};

StyleParams style_params(Style s) {
  switch (s) {
    case Style::slow: return {-0.08, 1.6, 0.02, 0.05, 0.03};
    case Style::medium: return {0.06, 1.2, 0.05, 0.10, 0.06};
    case Style::fast: return {0.22, 0.9, 0.08, 0.16, 0.10};
  }
  return {};
}

using GlyphShape = std::vector<std::vector<std::pair<double, double>>>;

GlyphShape make_glyph(Rng& rng) {
  GlyphShape shape;
  const int n_strokes = 2 + static_cast<int>(rng.uniform_index(3));
  for (int s = 0; s < n_strokes; ++s) {
    const int n_points = 3 + static_cast<int>(rng.uniform_index(3));
    std::vector<std::pair<double, double>> stroke;
    double x = rng.uniform(0.15, 0.85);
    double y = rng.uniform(0.15, 0.85);
    stroke.emplace_back(x, y);
    for (int p = 1; p < n_points; ++p) {
      x = std::clamp(x + rng.uniform(-0.45, 0.45), 0.08, 0.92);
      y = std::clamp(y + rng.uniform(-0.45, 0.45), 0.08, 0.92);
      stroke.emplace_back(x, y);
    }
    shape.push_back(std::move(stroke));
  }
  return shape;
}

struct WriterAlphabet {
  std::vector<GlyphShape> common;        // shared-bank shapes this writer uses
  std::vector<GlyphShape> idiosyncratic; // writer-unique shapes
  std::vector<double> rarity;            // one per idiosyncratic glyph
};

WriterAlphabet make_alphabet(const CorpusConfig& cfg,
                             const std::vector<GlyphShape>& bank, int writer,
                             const Rng& corpus_rng) {
  WriterAlphabet a;
  Rng rng = corpus_rng.derive(1000 + static_cast<std::uint64_t>(writer));
  const int n_idio = cfg.idiosyncratic_glyphs_per_writer;
  const int n_common = std::max(0, cfg.glyphs_per_writer - n_idio);
  for (int g = 0; g < n_common; ++g)
    a.common.push_back(bank[rng.uniform_index(bank.size())]);
  for (int g = 0; g < n_idio; ++g) {
    a.idiosyncratic.push_back(make_glyph(rng));
    a.rarity.push_back(rng.uniform(0.5, 1.0));
  }
  return a;
}

struct GlyphInstance {
  const GlyphShape* shape;
  double cx, cy;     // page pixel center
  double size;
  double shear, rot;
  double radius;
  int idio_index;    // index into alphabet.idiosyncratic, -1 for common
};

void place_instance(const GlyphInstance& ins, std::size_t page_h,
                    std::size_t page_w, int planted_index,
                    std::vector<StrokeRecord>& out) {
  const double c = std::cos(ins.rot), s = std::sin(ins.rot);
  for (const auto& stroke : *ins.shape) {
    StrokeRecord rec;
    rec.radius = ins.radius;
    rec.planted_index = planted_index;
    for (auto [u, v] : stroke) {
      double px = (u - 0.5) * ins.size;
      double py = (v - 0.5) * ins.size;
      px += ins.shear * (0.5 - v) * ins.size;
      const double rx = px * c - py * s;
      const double ry = px * s + py * c;
      double x = std::clamp(ins.cx + rx, 1.0, static_cast<double>(page_w) - 2.0);
      double y = std::clamp(ins.cy + ry, 1.0, static_cast<double>(page_h) - 2.0);
      rec.points.emplace_back(x, y);
    }
    out.push_back(std::move(rec));
  }
}

void stamp_disc(Image& img, double cx, double cy, double radius) {
  const long r_lo = std::max(0L, static_cast<long>(std::floor(cy - radius - 1)));
  const long r_hi = std::min(static_cast<long>(img.height) - 1,
                             static_cast<long>(std::ceil(cy + radius + 1)));
  const long c_lo = std::max(0L, static_cast<long>(std::floor(cx - radius - 1)));
  const long c_hi = std::min(static_cast<long>(img.width) - 1,
                             static_cast<long>(std::ceil(cx + radius + 1)));
  for (long r = r_lo; r <= r_hi; ++r) {
    for (long col = c_lo; col <= c_hi; ++col) {
      const double d = std::hypot(static_cast<double>(col) - cx,
                                  static_cast<double>(r) - cy);
      const double ink = std::clamp(radius + 0.5 - d, 0.0, 1.0);
      double& px = img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(col));
      px = std::max(px, ink);
    }
  }
}

NormLocation instance_center(const std::vector<StrokeRecord>& strokes,
                             int planted_index, std::size_t page_h,
                             std::size_t page_w) {
  double sx = 0.0, sy = 0.0;
  std::size_t n = 0;
  for (const auto& rec : strokes) {
    if (rec.planted_index != planted_index) continue;
    for (auto [x, y] : rec.points) {
      sx += x;
      sy += y;
      ++n;
    }
  }
  NormLocation loc;
  loc.x = page_w > 1 ? (sx / static_cast<double>(n)) / static_cast<double>(page_w - 1) : 0.0;
  loc.y = page_h > 1 ? (sy / static_cast<double>(n)) / static_cast<double>(page_h - 1) : 0.0;
  loc.x = std::clamp(loc.x, 0.0, 1.0);
  loc.y = std::clamp(loc.y, 0.0, 1.0);
  return loc;
}

PageSample render_page(const CorpusConfig& cfg, const WriterAlphabet& alphabet,
                       int writer, Style style, int page_index, Rng rng) {
  const std::size_t h = cfg.page_height, w = cfg.page_width;
  if (2.0 * kMargin + kCell > static_cast<double>(std::min(h, w)))
    throw std::runtime_error("page too small to place glyphs");

  const StyleParams sp = style_params(style);
  const int n_rows = static_cast<int>((static_cast<double>(h) - 2.0 * kMargin) / kCell);
  const int n_cols = static_cast<int>((static_cast<double>(w) - 2.0 * kMargin) / kCell);
  const double idio_fraction =
      cfg.glyphs_per_writer > 0
          ? static_cast<double>(cfg.idiosyncratic_glyphs_per_writer) /
                static_cast<double>(cfg.glyphs_per_writer)
          : 0.0;

  std::vector<GlyphInstance> instances;
  for (int row = 0; row < n_rows; ++row) {
    for (int col = 0; col < n_cols; ++col) {
      GlyphInstance ins;
      const bool idio = !alphabet.idiosyncratic.empty() &&
                        (alphabet.common.empty() || rng.uniform() < idio_fraction);
      if (idio) {
        ins.idio_index = static_cast<int>(rng.uniform_index(alphabet.idiosyncratic.size()));
        ins.shape = &alphabet.idiosyncratic[static_cast<std::size_t>(ins.idio_index)];
      } else {
        ins.idio_index = -1;
        ins.shape = &alphabet.common[rng.uniform_index(alphabet.common.size())];
      }
      ins.cx = kMargin + (col + 0.5) * kCell + rng.uniform(-1.0, 1.0) * sp.pos_jitter * kCell;
      ins.cy = kMargin + (row + 0.5) * kCell + rng.uniform(-1.0, 1.0) * sp.pos_jitter * kCell;
      ins.size = 0.78 * kCell * (1.0 + rng.uniform(-1.0, 1.0) * sp.size_jitter);
      ins.shear = sp.slant + rng.uniform(-0.03, 0.03);
      ins.rot = rng.uniform(-1.0, 1.0) * sp.rot_jitter;
      ins.radius = sp.radius;
      instances.push_back(ins);
    }
  }

  // Construction guarantee: at least one planted glyph per page when the
  // writer has any idiosyncratic glyph.
  if (!alphabet.idiosyncratic.empty()) {
    bool any = std::any_of(instances.begin(), instances.end(),
                           [](const GlyphInstance& i) { return i.idio_index >= 0; });
    if (!any && !instances.empty()) {
      GlyphInstance& ins = instances[instances.size() / 2];
      ins.idio_index = static_cast<int>(rng.uniform_index(alphabet.idiosyncratic.size()));
      ins.shape = &alphabet.idiosyncratic[static_cast<std::size_t>(ins.idio_index)];
    }
  }

  PageSample page;
  char buf[64];
  std::snprintf(buf, sizeof buf, "w%03d_%s_p%02d", writer, style_name(style), page_index);
  page.id = buf;
  page.writer_id = writer;
  page.style = style;

  int next_planted = 0;
  std::vector<double> planted_rarity;
  for (const auto& ins : instances) {
    const int planted_index = ins.idio_index >= 0 ? next_planted : -1;
    place_instance(ins, h, w, planted_index, page.strokes);
    if (ins.idio_index >= 0) {
      planted_rarity.push_back(alphabet.rarity[static_cast<std::size_t>(ins.idio_index)]);
      ++next_planted;
    }
  }
  for (int i = 0; i < next_planted; ++i) {
    PlantedGlyph g;
    g.center = instance_center(page.strokes, i, h, w);
    g.rarity = planted_rarity[static_cast<std::size_t>(i)];
    page.planted.push_back(g);
  }

  page.pixels = Image(h, w);
  rasterize_strokes(page.pixels, page.strokes);
  return page;
}

}  // namespace

void rasterize_strokes(Image& img, const std::vector<StrokeRecord>& strokes) {
  for (const auto& rec : strokes) {
    for (std::size_t i = 0; i + 1 < rec.points.size(); ++i) {
      const auto [x0, y0] = rec.points[i];
      const auto [x1, y1] = rec.points[i + 1];
      const double len = std::hypot(x1 - x0, y1 - y0);
      const int steps = std::max(1, static_cast<int>(std::ceil(len / 0.4)));
      for (int s = 0; s <= steps; ++s) {
        const double t = static_cast<double>(s) / steps;
        stamp_disc(img, x0 + t * (x1 - x0), y0 + t * (y1 - y0), rec.radius);
      }
    }
    if (rec.points.size() == 1)
      stamp_disc(img, rec.points[0].first, rec.points[0].second, rec.radius);
  }
}

std::vector<PageSample> generate_synthetic_corpus(const CorpusConfig& cfg) {
  if (cfg.n_writers < 1 || cfg.pages_per_writer_per_style < 1 ||
      cfg.glyphs_per_writer < 1 || cfg.idiosyncratic_glyphs_per_writer < 1)
    throw std::invalid_argument("corpus counts must be >= 1");
  if (cfg.idiosyncratic_glyphs_per_writer > cfg.glyphs_per_writer)
    throw std::invalid_argument("idiosyncratic glyphs exceed alphabet size");

  const Rng corpus_rng(cfg.rng_seed);
  Rng bank_rng = corpus_rng.derive(1);
  std::vector<GlyphShape> bank;
  bank.reserve(kCommonBankSize);
  for (int g = 0; g < kCommonBankSize; ++g) bank.push_back(make_glyph(bank_rng));

  std::vector<PageSample> corpus;
  for (int writer = 0; writer < cfg.n_writers; ++writer) {
    const WriterAlphabet alphabet = make_alphabet(cfg, bank, writer, corpus_rng);
    for (Style style : kAllStyles) {
      for (int p = 0; p < cfg.pages_per_writer_per_style; ++p) {
        const std::uint64_t stream =
            2000000 + (static_cast<std::uint64_t>(writer) * 16 +
                       static_cast<std::uint64_t>(style)) *
                          4096 +
            static_cast<std::uint64_t>(p);
        corpus.push_back(render_page(cfg, alphabet, writer, style, p,
                                     corpus_rng.derive(stream)));
      }
    }
  }
  return corpus;
}

std::vector<PageSample> drop_stroke_augment(const PageSample& page, int n_aug,
                                            double drop_fraction,
                                            std::uint64_t seed) {
  if (!(drop_fraction > 0.0 && drop_fraction < 1.0))
    throw std::invalid_argument("drop_fraction must be in (0,1)");
  if (!page.has_strokes()) throw std::runtime_error("no stroke provenance");

  const Rng base(seed);
  std::vector<PageSample> out;
  out.reserve(static_cast<std::size_t>(n_aug));
  for (int k = 0; k < n_aug; ++k) {
    Rng rng = base.derive(static_cast<std::uint64_t>(k));
    const std::size_t n = page.strokes.size();
    const std::size_t n_drop =
        static_cast<std::size_t>(drop_fraction * static_cast<double>(n));
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = 0; i < n_drop; ++i) {
      const std::size_t j = i + rng.uniform_index(n - i);
      std::swap(order[i], order[j]);
    }
    std::vector<char> dropped(n, 0);
    for (std::size_t i = 0; i < n_drop; ++i) dropped[order[i]] = 1;

    PageSample aug;
    char buf[32];
    std::snprintf(buf, sizeof buf, "_a%02d", k);
    aug.id = page.id + buf;
    aug.writer_id = page.writer_id;
    aug.style = page.style;

    // Keep planted glyphs that still own at least one stroke; remap indices.
    std::vector<int> remap(page.planted.size(), -1);
    for (std::size_t i = 0; i < n; ++i) {
      if (dropped[i]) continue;
      const int pi = page.strokes[i].planted_index;
      if (pi >= 0 && remap[static_cast<std::size_t>(pi)] < 0) {
        remap[static_cast<std::size_t>(pi)] =
            static_cast<int>(aug.planted.size());
        aug.planted.push_back(page.planted[static_cast<std::size_t>(pi)]);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (dropped[i]) continue;
      StrokeRecord rec = page.strokes[i];
      if (rec.planted_index >= 0)
        rec.planted_index = remap[static_cast<std::size_t>(rec.planted_index)];
      aug.strokes.push_back(std::move(rec));
    }

    aug.pixels = Image(page.pixels.height, page.pixels.width);
    rasterize_strokes(aug.pixels, aug.strokes);
    out.push_back(std::move(aug));
  }
  return out;
}

const char* split_name(SplitPart p) {
  switch (p) {
    case SplitPart::train: return "train";
    case SplitPart::val: return "val";
    case SplitPart::test: return "test";
    case SplitPart::none: return "-";
  }
  return "?";
}

SplitPart split_from_name(const std::string& name) {
  if (name == "train") return SplitPart::train;
  if (name == "val") return SplitPart::val;
  if (name == "test") return SplitPart::test;
  if (name == "-" || name.empty()) return SplitPart::none;
  throw std::invalid_argument("unknown split: " + name);
}

std::string origin_of(const std::string& sample_id) {
  const auto pos = sample_id.rfind("_a");
  if (pos == std::string::npos || pos + 2 >= sample_id.size()) return sample_id;
  for (std::size_t i = pos + 2; i < sample_id.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(sample_id[i]))) return sample_id;
  return sample_id.substr(0, pos);
}

std::map<std::string, SplitPart> split_corpus(const std::vector<PageSample>& corpus,
                                              std::uint64_t seed) {
  // cell key -> origin groups in first-appearance order
  std::map<std::pair<int, int>, std::vector<std::string>> cells;
  std::map<std::string, std::vector<const PageSample*>> groups;
  for (const auto& page : corpus) {
    const std::string origin = origin_of(page.id);
    auto& members = groups[origin];
    if (members.empty()) {
      cells[{page.writer_id, static_cast<int>(page.style)}].push_back(origin);
    }
    members.push_back(&page);
  }

  const Rng rng(seed);
  std::map<std::string, SplitPart> out;
  std::uint64_t cell_stream = 0;
  for (auto& [key, origins] : cells) {
    Rng cell_rng = rng.derive(3000000 + cell_stream++);
    const std::size_t g = origins.size();
    if (g < 4)
      throw std::runtime_error("too few samples in (writer,style) cell for 2:1:1 split");
    for (std::size_t i = 0; i + 1 < g; ++i) {
      const std::size_t j = i + cell_rng.uniform_index(g - i);
      std::swap(origins[i], origins[j]);
    }
    const std::size_t n_test = std::max<std::size_t>(1, g / 4);
    const std::size_t n_val = std::max<std::size_t>(1, g / 4);
    const std::size_t n_train = g - n_val - n_test;
    for (std::size_t i = 0; i < g; ++i) {
      SplitPart part = i < n_train                ? SplitPart::train
                       : i < n_train + n_val      ? SplitPart::val
                                                  : SplitPart::test;
      for (const PageSample* page : groups[origins[i]]) out[page->id] = part;
    }
  }
  return out;
}

// --- files -------------------------------------------------------------

void write_pgm(const std::string& path, const Image& img) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write pgm: " + path);
  os << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(img.width);
  for (std::size_t r = 0; r < img.height; ++r) {
    for (std::size_t c = 0; c < img.width; ++c) {
      const double ink = std::clamp(img.at(r, c), 0.0, 1.0);
      row[c] = static_cast<unsigned char>(255.0 - std::lround(ink * 255.0));
    }
    os.write(reinterpret_cast<const char*>(row.data()),
             static_cast<std::streamsize>(row.size()));
  }
}

Image read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read pgm: " + path);
  std::string magic;
  is >> magic;
  if (magic != "P5") throw std::runtime_error("not a binary pgm: " + path);
  std::size_t w = 0, h = 0;
  int maxval = 0;
  is >> w >> h >> maxval;
  if (maxval != 255) throw std::runtime_error("unsupported pgm maxval");
  is.get();  // single whitespace after header
  Image img(h, w);
  std::vector<unsigned char> row(w);
  for (std::size_t r = 0; r < h; ++r) {
    is.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(w));
    if (!is) throw std::runtime_error("truncated pgm: " + path);
    for (std::size_t c = 0; c < w; ++c)
      img.at(r, c) = (255.0 - static_cast<double>(row[c])) / 255.0;
  }
  return img;
}

void write_manifest(const std::string& path, const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write manifest: " + path);
  for (const auto& e : entries) {
    os << e.id << "," << e.writer_id << "," << style_name(e.style) << ","
       << e.path << "," << split_name(e.split) << "\n";
  }
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read manifest: " + path);
  std::vector<ManifestEntry> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    ManifestEntry e;
    std::getline(ss, e.id, ',');
    std::getline(ss, field, ',');
    e.writer_id = std::stoi(field);
    std::getline(ss, field, ',');
    e.style = style_from_name(field);
    std::getline(ss, e.path, ',');
    std::getline(ss, field, ',');
    e.split = split_from_name(field);
    out.push_back(std::move(e));
  }
  return out;
}

void write_scores(const std::string& path, const std::vector<PageSample>& corpus) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write scores: " + path);
  char buf[128];
  for (const auto& page : corpus) {
    for (const auto& g : page.planted) {
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g", g.center.x, g.center.y,
                    g.rarity * 10.0);
      os << page.id << "," << buf << "\n";
    }
  }
}

std::map<std::string, std::vector<PlantedGlyph>> read_scores(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read scores: " + path);
  std::map<std::string, std::vector<PlantedGlyph>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, field;
    std::getline(ss, id, ',');
    PlantedGlyph g;
    std::getline(ss, field, ',');
    g.center.x = std::stod(field);
    std::getline(ss, field, ',');
    g.center.y = std::stod(field);
    OpinionScoreSet set;
    while (std::getline(ss, field, ',')) set.raw_scores.push_back(std::stod(field));
    g.rarity = normalize_opinion_scores(set);
    out[id].push_back(g);
  }
  return out;
}

void save_corpus(const std::string& dir, const std::vector<PageSample>& corpus,
                 const std::map<std::string, SplitPart>& split) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "pages");
  std::vector<ManifestEntry> entries;
  for (const auto& page : corpus) {
    ManifestEntry e;
    e.id = page.id;
    e.writer_id = page.writer_id;
    e.style = page.style;
    e.path = "pages/" + page.id + ".pgm";
    auto it = split.find(page.id);
    e.split = it == split.end() ? SplitPart::none : it->second;
    write_pgm((fs::path(dir) / e.path).string(), page.pixels);
    entries.push_back(std::move(e));
  }
  write_manifest((fs::path(dir) / "manifest.csv").string(), entries);
  write_scores((fs::path(dir) / "scores.csv").string(), corpus);
}

LoadedCorpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  LoadedCorpus out;
  const auto entries = read_manifest((fs::path(dir) / "manifest.csv").string());
  auto scores = read_scores((fs::path(dir) / "scores.csv").string());
  for (const auto& e : entries) {
    PageSample page;
    page.id = e.id;
    page.writer_id = e.writer_id;
    page.style = e.style;
    page.pixels = read_pgm((fs::path(dir) / e.path).string());
    if (auto it = scores.find(e.id); it != scores.end()) page.planted = it->second;
    out.split[e.id] = e.split;
    out.pages.push_back(std::move(page));
  }
  return out;
}

}  // namespace idio
