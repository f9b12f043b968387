#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "idio/corpus.hpp"
#include "idio/wid.hpp"

using namespace idio;

TEST_CASE("patch_weight: Eq.-8 branches including the strict boundary") {
  FusionConfig cfg;
  CHECK(patch_weight(0.5, cfg) == doctest::Approx(5.0));
  CHECK(patch_weight(0.05, cfg) == doctest::Approx(1.0));
  CHECK(patch_weight(0.1, cfg) == doctest::Approx(1.0));  // strict inequality
  CHECK(patch_weight(1.0, cfg) == doctest::Approx(10.0));
}

TEST_CASE("fuse_decisions: the worked two-patch example") {
  FuseResult r = fuse_decisions({{0.6, 0.4}, {0.2, 0.8}}, {5.0, 1.0});
  CHECK(r.probs[0] == doctest::Approx(3.2 / 6.0));
  CHECK(r.probs[1] == doctest::Approx(2.8 / 6.0));
  CHECK(r.writer_id == 0);
}

TEST_CASE("fuse_decisions: equal weights give the plain mean; k=1 passes through") {
  FuseResult mean = fuse_decisions({{0.1, 0.9}, {0.5, 0.5}}, {2.0, 2.0});
  CHECK(mean.probs[0] == doctest::Approx(0.3));
  CHECK(mean.probs[1] == doctest::Approx(0.7));

  FuseResult single = fuse_decisions({{0.25, 0.75}}, {42.0});
  CHECK(single.probs[0] == doctest::Approx(0.25));
  CHECK(single.probs[1] == doctest::Approx(0.75));
}

TEST_CASE("fuse_decisions: errors on empty and mismatched inputs") {
  CHECK_THROWS_AS(fuse_decisions({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(fuse_decisions({{0.5, 0.5}}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(fuse_decisions({{0.5, 0.5}}, {0.0}), std::invalid_argument);
}

TEST_CASE("fusion matches an exact-rational oracle; argmax invariant to weight scale") {
  Rng rng(71);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t k = 1 + rng.uniform_index(6);
    const std::size_t d = 2 + rng.uniform_index(5);
    const long long A = 16;
    std::vector<std::vector<double>> probs(k, std::vector<double>(d));
    std::vector<std::vector<long long>> a(k, std::vector<long long>(d, 0));
    std::vector<double> weights(k);
    std::vector<long long> b(k);
    for (std::size_t j = 0; j < k; ++j) {
      // integer composition of A over d cells
      long long rest = A;
      for (std::size_t c = 0; c + 1 < d; ++c) {
        a[j][c] = static_cast<long long>(rng.uniform_index(rest + 1));
        rest -= a[j][c];
      }
      a[j][d - 1] = rest;
      for (std::size_t c = 0; c < d; ++c)
        probs[j][c] = static_cast<double>(a[j][c]) / static_cast<double>(A);
      b[j] = 1 + static_cast<long long>(rng.uniform_index(8));
      weights[j] = static_cast<double>(b[j]);
    }

    const FuseResult r = fuse_decisions(probs, weights);

    // oracle: z_d = sum_j b_j a_jd / (A sum_j b_j), exact in int64
    long long b_total = 0;
    for (long long v : b) b_total += v;
    std::vector<long long> num(d, 0);
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t c = 0; c < d; ++c) num[c] += b[j] * a[j][c];
    const double den = static_cast<double>(A * b_total);
    std::size_t arg = 0;
    bool unique_max = true;
    for (std::size_t c = 1; c < d; ++c)
      if (num[c] > num[arg]) arg = c;
    for (std::size_t c = 0; c < d; ++c)
      if (c != arg && num[c] == num[arg]) unique_max = false;

    double z_total = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      CHECK(std::fabs(r.probs[c] - static_cast<double>(num[c]) / den) <= 1e-14);
      z_total += r.probs[c];
      CHECK(r.probs[c] >= -1e-15);
    }
    CHECK(std::fabs(z_total - 1.0) <= 1e-9);
    if (unique_max) CHECK(r.writer_id == static_cast<int>(arg));

    // positive rescaling leaves z and the argmax unchanged
    std::vector<double> scaled = weights;
    const double c_scale = rng.uniform(0.1, 25.0);
    for (double& w : scaled) w *= c_scale;
    const FuseResult r2 = fuse_decisions(probs, scaled);
    if (unique_max) CHECK(r2.writer_id == r.writer_id);
    for (std::size_t c = 0; c < d; ++c)
      CHECK(r2.probs[c] == doctest::Approx(r.probs[c]).epsilon(1e-12));

    // convexity: z within [min_j s_j, max_j s_j] per class
    for (std::size_t c = 0; c < d; ++c) {
      double lo = 1.0, hi = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        lo = std::min(lo, probs[j][c]);
        hi = std::max(hi, probs[j][c]);
      }
      CHECK(r.probs[c] >= lo - 1e-12);
      CHECK(r.probs[c] <= hi + 1e-12);
    }
  }
}

TEST_CASE("top_n_accuracy: exact cases and ordering in n") {
  // n = d recovers everything
  std::vector<std::vector<double>> z = {{0.2, 0.5, 0.3}, {0.9, 0.05, 0.05}};
  std::vector<int> labels = {2, 0};
  CHECK(top_n_accuracy(z, labels, 3) == doctest::Approx(1.0));

  // perfect classifier at n = 1
  CHECK(top_n_accuracy({{0.1, 0.9}, {0.8, 0.2}}, {1, 0}, 1) == doctest::Approx(1.0));

  // hand-built 3-page case with one miss
  std::vector<std::vector<double>> z3 = {
      {0.7, 0.2, 0.1}, {0.1, 0.6, 0.3}, {0.5, 0.4, 0.1}};
  std::vector<int> l3 = {0, 1, 2};
  CHECK(top_n_accuracy(z3, l3, 1) == doctest::Approx(2.0 / 3.0));

  // Top-1 <= Top-2 <= Top-5 on a random prediction set
  Rng rng(4);
  std::vector<std::vector<double>> zr;
  std::vector<int> lr;
  for (int i = 0; i < 40; ++i) {
    std::vector<double> row(6);
    double total = 0;
    for (double& v : row) {
      v = rng.uniform(0.01, 1.0);
      total += v;
    }
    for (double& v : row) v /= total;
    zr.push_back(row);
    lr.push_back(static_cast<int>(rng.uniform_index(6)));
  }
  const double t1 = top_n_accuracy(zr, lr, 1);
  const double t2 = top_n_accuracy(zr, lr, 2);
  const double t5 = top_n_accuracy(zr, lr, 5);
  CHECK(t1 <= t2);
  CHECK(t2 <= t5);
}

TEST_CASE("uniform probabilities give chance level under the index tie-break") {
  std::vector<std::vector<double>> z(60, std::vector<double>(5, 0.2));
  std::vector<int> labels;
  Rng rng(10);
  int zeros = 0;
  for (int i = 0; i < 60; ++i) {
    labels.push_back(static_cast<int>(rng.uniform_index(5)));
    if (labels.back() == 0) ++zeros;
  }
  CHECK(top_n_accuracy(z, labels, 1) ==
        doctest::Approx(static_cast<double>(zeros) / 60.0));
}

namespace {

WiConfig tiny_wi_config(int d) {
  WiConfig cfg;
  cfg.n_writers = d;
  cfg.pad_target = 11;
  cfg.encoder.input_side = 11;
  cfg.encoder.feature_dim = 16;
  cfg.encoder.channels = {6, 12};
  cfg.epochs = 30;
  cfg.batch_size = 16;
  cfg.sgd.learning_rate = 0.05;
  cfg.sgd.weight_decay = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("patch_class_probs: zero head gives uniform; probabilities sum to 1") {
  WiConfig cfg = tiny_wi_config(4);
  WriterId model(cfg);  // zero-initialized head
  Patch p;
  p.pixels = Image(11, 11);
  Rng rng(2);
  for (double& v : p.pixels.pixels) v = rng.uniform();
  auto probs = model.patch_class_probs(p, false, nullptr);
  REQUIRE(probs.size() == 4);
  for (double v : probs) CHECK(v == doctest::Approx(0.25));

  model.init(rng);
  auto probs2 = model.patch_class_probs(p, false, nullptr);
  double total = 0;
  for (double v : probs2) total += v;
  CHECK(std::fabs(total - 1.0) <= 1e-9);
}

TEST_CASE("writer-id training separates a tiny synthetic corpus") {
  CorpusConfig ccfg;
  ccfg.n_writers = 3;
  ccfg.pages_per_writer_per_style = 2;
  ccfg.glyphs_per_writer = 6;
  ccfg.idiosyncratic_glyphs_per_writer = 3;
  ccfg.page_height = 96;
  ccfg.page_width = 96;
  ccfg.rng_seed = 5;
  const auto corpus = generate_synthetic_corpus(ccfg);

  WiConfig cfg = tiny_wi_config(3);
  WriterId model(cfg);
  Rng rng(6);
  model.init(rng);

  // selected patches = centers of planted glyphs (oracle selection)
  std::vector<SelectedPage> pages;
  for (const auto& page : corpus) {
    SelectedPage sp;
    sp.page = &page;
    for (std::size_t g = 0; g < std::min<std::size_t>(4, page.planted.size()); ++g) {
      ScoredPatch scored;
      scored.patch = extract_patch(page, page.planted[g].center, 11);
      scored.score = page.planted[g].rarity;
      sp.patches.push_back(std::move(scored));
    }
    pages.push_back(std::move(sp));
  }

  const double first_loss = [&] {
    WriterId probe(cfg);
    Rng prng(6);
    probe.init(prng);
    // loss at epoch 0 is about ln d for a near-uniform classifier
    WiConfig one = cfg;
    one.epochs = 1;
    WriterId tmp(one);
    Rng trng(6);
    tmp.init(trng);
    return tmp.train(pages, Rng(60));
  }();
  CHECK(first_loss == doctest::Approx(std::log(3.0)).epsilon(0.25));

  model.train(pages, Rng(61));
  int correct = 0;
  for (const auto& sp : pages) {
    if (model.classify(sp).writer_id == sp.page->writer_id) ++correct;
  }
  CHECK(static_cast<double>(correct) / pages.size() >= 0.9);
}

TEST_CASE("single-class degenerate task reaches training accuracy 1") {
  CorpusConfig ccfg;
  ccfg.n_writers = 1;
  ccfg.pages_per_writer_per_style = 2;
  ccfg.glyphs_per_writer = 4;
  ccfg.idiosyncratic_glyphs_per_writer = 2;
  ccfg.page_height = 96;
  ccfg.page_width = 96;
  ccfg.rng_seed = 8;
  const auto corpus = generate_synthetic_corpus(ccfg);

  WiConfig cfg = tiny_wi_config(2);  // d = 2, all labels 0
  cfg.epochs = 10;
  WriterId model(cfg);
  Rng rng(9);
  model.init(rng);

  std::vector<SelectedPage> pages;
  for (const auto& page : corpus) {
    SelectedPage sp;
    sp.page = &page;
    ScoredPatch scored;
    scored.patch = extract_patch(page, page.planted[0].center, 11);
    scored.score = page.planted[0].rarity;
    sp.patches.push_back(std::move(scored));
    pages.push_back(std::move(sp));
  }
  model.train(pages, Rng(10));
  for (const auto& sp : pages) CHECK(model.classify(sp).writer_id == 0);
}

TEST_CASE("train rejects labels outside [0, d)") {
  WiConfig cfg = tiny_wi_config(2);
  WriterId model(cfg);
  PageSample page;
  page.pixels = Image(32, 32);
  page.writer_id = 7;
  SelectedPage sp;
  sp.page = &page;
  ScoredPatch scored;
  scored.patch = extract_patch(page, {0.5, 0.5}, 11);
  sp.patches.push_back(std::move(scored));
  CHECK_THROWS_AS(model.train({sp}, Rng(1)), std::invalid_argument);
}
