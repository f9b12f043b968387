// idio: idiosyncrasy-driven writer inspection pipeline.
//
// Subcommands: corpus gen|split, agent train|select, wi train|eval,
// wv train|eval, ablate rand|all|norl, report. Every command takes --seed and
// an optional --config (flat key = value file); all outputs are deterministic
// under a fixed seed and config.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "idio/agent.hpp"
#include "idio/checkpoint.hpp"
#include "idio/config.hpp"
#include "idio/corpus.hpp"
#include "idio/kernels.hpp"
#include "idio/metrics.hpp"
#include "idio/wid.hpp"
#include "idio/wver.hpp"

namespace fs = std::filesystem;
using namespace idio;

namespace {

struct CommonArgs {
  std::string config_path;
  std::uint64_t seed = 1;

  Config config() const {
    return config_path.empty() ? Config() : Config::from_file(config_path);
  }
};

void add_common(CLI::App* cmd, CommonArgs* args) {
  cmd->add_option("--config", args->config_path, "flat key = value config file");
  cmd->add_option("--seed", args->seed, "RNG seed");
}

std::vector<std::size_t> parse_channels(const std::string& csv) {
  std::vector<std::size_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoul(item));
  return out;
}

CorpusConfig corpus_config(const Config& cfg, std::uint64_t seed) {
  CorpusConfig c;
  c.n_writers = cfg.get_int("corpus.writers", c.n_writers);
  c.pages_per_writer_per_style =
      cfg.get_int("corpus.pages_per_style", c.pages_per_writer_per_style);
  c.glyphs_per_writer = cfg.get_int("corpus.glyphs", c.glyphs_per_writer);
  c.idiosyncratic_glyphs_per_writer =
      cfg.get_int("corpus.idiosyncratic", c.idiosyncratic_glyphs_per_writer);
  c.page_height = static_cast<std::size_t>(cfg.get_int("corpus.page", 256));
  c.page_width = c.page_height;
  c.score_kernel_width = cfg.get_double("corpus.sigma", c.score_kernel_width);
  c.rng_seed = seed;
  return c;
}

AgentConfig agent_config(const Config& cfg) {
  AgentConfig a;
  a.encoder.input_side = static_cast<std::size_t>(cfg.get_int("agent.patch", 32));
  a.encoder.feature_dim =
      static_cast<std::size_t>(cfg.get_int("agent.feature_dim", 64));
  a.encoder.channels = parse_channels(cfg.get_string("agent.channels", "16,32,64"));
  a.encoder.pooled = cfg.get_bool("agent.pooled", false);
  a.hidden_dim = static_cast<std::size_t>(cfg.get_int("agent.hidden", 64));
  a.reward.t_r1 = cfg.get_double("reward.t_r1", 0.1);
  a.reward.t_r2 = cfg.get_double("reward.t_r2", 0.5);
  a.policy.location_variance = cfg.get_double("agent.variance", 0.01);
  a.policy.episodes = cfg.get_int("agent.episodes", 2400);
  a.policy.steps_per_episode = cfg.get_int("agent.steps", 16);
  a.policy.discount = cfg.get_double("agent.gamma", 0.95);
  a.policy.episodes_per_update = cfg.get_int("agent.batch", 8);
  a.policy.select_episodes = cfg.get_int("agent.select_episodes", 5);
  a.gt_sigma = cfg.get_double("corpus.sigma", 0.05);
  a.scorer_warmup_epochs = cfg.get_int("agent.warmup_epochs", 15);
  a.warmup_stride = static_cast<std::size_t>(cfg.get_int("agent.warmup_stride", 8));
  a.scorer_lr = cfg.get_double("agent.scorer_lr", 0.05);
  a.policy_lr = cfg.get_double("agent.policy_lr", 0.002);
  return a;
}

SgdConfig sgd_config(const Config& cfg, const std::string& prefix,
                     double default_lr) {
  SgdConfig s;
  s.learning_rate = cfg.get_double(prefix + ".lr", default_lr);
  s.momentum = cfg.get_double(prefix + ".momentum", 0.9);
  s.weight_decay = cfg.get_double(prefix + ".weight_decay", 1e-4);
  return s;
}

WiConfig wi_config(const Config& cfg, int n_writers) {
  WiConfig w;
  w.n_writers = n_writers;
  w.dropout_rate = cfg.get_double("wi.dropout", 0.2);
  w.fusion.alpha_w = cfg.get_double("wi.alpha_w", 10.0);
  w.fusion.weight_floor_threshold = cfg.get_double("wi.weight_floor", 0.1);
  w.pad_target = static_cast<std::size_t>(cfg.get_int("wi.pad", 41));
  w.encoder.input_side = w.pad_target;
  w.encoder.feature_dim =
      static_cast<std::size_t>(cfg.get_int("wi.feature_dim", 64));
  w.encoder.channels = parse_channels(cfg.get_string("wi.channels", "16,32"));
  w.encoder.pooled = cfg.get_bool("wi.pooled", true);
  w.epochs = cfg.get_int("wi.epochs", 60);
  w.batch_size = cfg.get_int("wi.batch", 32);
  w.sgd = sgd_config(cfg, "train", 0.01);
  return w;
}

WvConfig wv_config(const Config& cfg) {
  WvConfig w;
  w.triplet.margin = cfg.get_double("wv.margin", 0.2);
  w.triplet.batch_writers = cfg.get_int("wv.batch_writers", 5);
  w.triplet.batch_per_writer = cfg.get_int("wv.batch_per_writer", 2);
  w.mode = aggregation_from_name(cfg.get_string("wv.mode", "maf"));
  w.pad_target = static_cast<std::size_t>(cfg.get_int("wv.pad", 41));
  w.encoder.input_side = w.pad_target;
  w.encoder.feature_dim =
      static_cast<std::size_t>(cfg.get_int("wv.feature_dim", 64));
  w.encoder.channels = parse_channels(cfg.get_string("wv.channels", "16,32"));
  w.encoder.pooled = cfg.get_bool("wv.pooled", true);
  w.epochs = cfg.get_int("wv.epochs", 40);
  w.sgd = sgd_config(cfg, "train", 0.01);
  return w;
}

ExperimentConfig experiment_config(const Config& cfg, int n_writers,
                                   std::uint64_t seed) {
  ExperimentConfig e;
  e.k = cfg.get_int("eval.k", 16);
  e.rand_repeats = cfg.get_int("eval.repeats", 30);
  e.window_stride = static_cast<std::size_t>(cfg.get_int("eval.stride", 32));
  e.wi = wi_config(cfg, n_writers);
  e.wv = wv_config(cfg);
  e.seed = seed;
  return e;
}

int corpus_writer_count(const std::vector<PageSample>& pages) {
  int d = 0;
  for (const auto& p : pages) d = std::max(d, p.writer_id + 1);
  return d;
}

AttentionAgent load_agent(const Config& cfg, const std::string& ckpt) {
  AttentionAgent agent(agent_config(cfg));
  ParamRefs refs = agent.all_params();
  load_checkpoint(ckpt, refs);
  return agent;
}

std::unique_ptr<StandaloneScorer> train_norl_scorer(
    const Config& cfg, const std::vector<PageSample>& corpus,
    const std::map<std::string, SplitPart>& split, std::uint64_t seed) {
  AgentConfig acfg = agent_config(cfg);
  StandaloneScorer scorer(acfg.encoder);
  Rng rng(seed ^ 0x6e6f726cULL);
  scorer.init(rng);
  const auto train_pages = pages_of(corpus, split, SplitPart::train, std::nullopt);
  const auto labelled = window_training_patches(
      train_pages, acfg.encoder.input_side,
      static_cast<std::size_t>(cfg.get_int("eval.stride", 32)), acfg.gt_sigma);
  scorer.train(labelled, rng.derive(1), sgd_config(cfg, "train", 0.01),
               cfg.get_int("norl.epochs", 30));
  return std::make_unique<StandaloneScorer>(std::move(scorer));
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write: " + path);
  for (const auto& line : lines) os << line << "\n";
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// --- subcommand bodies -----------------------------------------------------

int cmd_corpus_gen(const CommonArgs& common, const std::string& out_dir,
                   int n_aug, double drop_fraction) {
  const Config cfg = common.config();
  const CorpusConfig ccfg = corpus_config(cfg, common.seed);
  auto corpus = generate_synthetic_corpus(ccfg);
  if (n_aug > 0) {
    std::vector<PageSample> with_augs;
    for (auto& page : corpus) {
      auto augs = drop_stroke_augment(page, n_aug, drop_fraction,
                                      common.seed ^ stable_hash(page.id));
      with_augs.push_back(std::move(page));
      for (auto& a : augs) with_augs.push_back(std::move(a));
    }
    corpus = std::move(with_augs);
  }
  save_corpus(out_dir, corpus, {});
  std::printf("wrote %zu pages to %s\n", corpus.size(), out_dir.c_str());
  return 0;
}

int cmd_corpus_split(const CommonArgs& common, const std::string& dir) {
  auto loaded = load_corpus(dir);
  const auto split = split_corpus(loaded.pages, common.seed);
  std::vector<ManifestEntry> entries;
  for (const auto& page : loaded.pages) {
    ManifestEntry e;
    e.id = page.id;
    e.writer_id = page.writer_id;
    e.style = page.style;
    e.path = "pages/" + page.id + ".pgm";
    e.split = split.at(page.id);
    entries.push_back(std::move(e));
  }
  write_manifest((fs::path(dir) / "manifest.csv").string(), entries);
  std::printf("split %zu pages (2:1:1 per writer-style cell)\n", entries.size());
  return 0;
}

int cmd_agent_train(const CommonArgs& common, const std::string& dir,
                    const std::string& out, const std::string& log_path) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  const auto train_pages =
      pages_of(loaded.pages, loaded.split, SplitPart::train, std::nullopt);
  if (train_pages.empty()) throw std::runtime_error("no train split; run corpus split");

  AttentionAgent agent(agent_config(cfg));
  Rng rng(common.seed);
  agent.init(rng);

  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::trunc);
    log << "epoch,mean_return,baseline_mse,scorer_mse,mean_top_k_score\n";
  }
  agent.train(train_pages, rng.derive(1), sgd_config(cfg, "train", 0.01),
              log_path.empty() ? nullptr : &log);

  save_checkpoint(out, checkpoint_view(agent.all_params()));
  std::printf("trained agent on %zu pages -> %s\n", train_pages.size(), out.c_str());
  return 0;
}

int cmd_agent_select(const CommonArgs& common, const std::string& dir,
                     const std::string& agent_ckpt, int k,
                     const std::string& out) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  AttentionAgent agent = load_agent(cfg, agent_ckpt);

  std::vector<std::string> lines;
  for (const auto& page : loaded.pages) {
    Rng rng(common.seed ^ stable_hash(page.id));
    for (const auto& sp : agent.select_top_k(page, cfg.get_int("eval.k", 16), rng)) {
      lines.push_back(page.id + "," + fmt(sp.patch.center.x) + "," +
                      fmt(sp.patch.center.y) + "," + fmt(sp.score));
    }
    (void)k;
  }
  write_lines(out, lines);
  std::printf("wrote selections for %zu pages -> %s\n", loaded.pages.size(),
              out.c_str());
  return 0;
}

int cmd_wi_train(const CommonArgs& common, const std::string& dir,
                 const std::string& agent_ckpt, const std::string& style,
                 const std::string& method, const std::string& out) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  AttentionAgent agent = load_agent(cfg, agent_ckpt);
  const int d = corpus_writer_count(loaded.pages);
  const ExperimentConfig ecfg = experiment_config(cfg, d, common.seed);
  const SelectionMethod m = method_from_name(method);

  std::unique_ptr<StandaloneScorer> norl;
  if (m == SelectionMethod::no_rl)
    norl = train_norl_scorer(cfg, loaded.pages, loaded.split, common.seed);

  const auto train_pages =
      pages_of(loaded.pages, loaded.split, SplitPart::train, style_from_name(style));
  std::vector<SelectedPage> selected;
  for (const PageSample* page : train_pages)
    selected.push_back(make_selected(m, agent, norl.get(), *page, ecfg.k,
                                     ecfg.window_stride, ecfg.seed, 1));

  WriterId model(ecfg.wi);
  Rng rng(common.seed ^ 0x77695472ULL);
  model.init(rng);
  model.train(selected, rng.derive(1));
  save_checkpoint(out, checkpoint_view(model.params()));
  std::printf("trained wi head (d=%d) on %zu pages -> %s\n", d,
              train_pages.size(), out.c_str());
  return 0;
}

int cmd_wi_eval(const CommonArgs& common, const std::string& dir,
                const std::string& agent_ckpt, const std::string& wi_ckpt,
                const std::string& style, const std::string& method,
                const std::string& records_path) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  AttentionAgent agent = load_agent(cfg, agent_ckpt);
  const int d = corpus_writer_count(loaded.pages);
  const ExperimentConfig ecfg = experiment_config(cfg, d, common.seed);
  const SelectionMethod m = method_from_name(method);

  std::unique_ptr<StandaloneScorer> norl;
  if (m == SelectionMethod::no_rl)
    norl = train_norl_scorer(cfg, loaded.pages, loaded.split, common.seed);

  WriterId model(ecfg.wi);
  {
    ParamRefs refs = model.params();
    load_checkpoint(wi_ckpt, refs);
  }

  const auto test_pages =
      pages_of(loaded.pages, loaded.split, SplitPart::test, style_from_name(style));
  const int repeats = m == SelectionMethod::rand_k ? ecfg.rand_repeats : 1;

  std::vector<std::string> lines;
  double top1 = 0, top2 = 0, top5 = 0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<std::vector<double>> zs;
    std::vector<int> labels;
    for (const PageSample* page : test_pages) {
      SelectedPage sp = make_selected(m, agent, norl.get(), *page, ecfg.k,
                                      ecfg.window_stride, ecfg.seed,
                                      2 + static_cast<std::uint64_t>(r));
      FuseResult fused = model.classify(sp);
      if (r == 0) {
        std::vector<std::size_t> idx(fused.probs.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
          if (fused.probs[a] != fused.probs[b])
            return fused.probs[a] > fused.probs[b];
          return a < b;
        });
        std::string lab, prob;
        for (std::size_t i = 0; i < std::min<std::size_t>(5, idx.size()); ++i) {
          if (i) {
            lab += " ";
            prob += " ";
          }
          lab += std::to_string(idx[i]);
          prob += fmt(fused.probs[idx[i]]);
        }
        lines.push_back(page->id + "," + std::to_string(page->writer_id) + "," +
                        lab + "," + prob);
      }
      zs.push_back(std::move(fused.probs));
      labels.push_back(page->writer_id);
    }
    top1 += top_n_accuracy(zs, labels, 1);
    top2 += top_n_accuracy(zs, labels, std::min(2, d));
    top5 += top_n_accuracy(zs, labels, std::min(5, d));
  }
  top1 /= repeats;
  top2 /= repeats;
  top5 /= repeats;

  if (!records_path.empty()) {
    write_lines(records_path, lines);
    write_lines(records_path + ".summary",
                {"task=wi method=" + std::string(method_name(m)) +
                 " test_style=" + style + " top1=" + fmt(top1) +
                 " top2=" + fmt(top2) + " top5=" + fmt(top5)});
  }
  std::printf("wi eval style=%s method=%s top1=%s top2=%s top5=%s\n",
              style.c_str(), method_name(m), fmt(top1).c_str(),
              fmt(top2).c_str(), fmt(top5).c_str());
  return 0;
}

int cmd_wv_train(const CommonArgs& common, const std::string& dir,
                 const std::string& agent_ckpt, const std::string& style,
                 const std::string& method, const std::string& out) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  AttentionAgent agent = load_agent(cfg, agent_ckpt);
  const ExperimentConfig ecfg =
      experiment_config(cfg, corpus_writer_count(loaded.pages), common.seed);
  const SelectionMethod m = method_from_name(method);

  std::unique_ptr<StandaloneScorer> norl;
  if (m == SelectionMethod::no_rl)
    norl = train_norl_scorer(cfg, loaded.pages, loaded.split, common.seed);

  const Style st = style_from_name(style);
  const auto train_pages = pages_of(loaded.pages, loaded.split, SplitPart::train, st);
  std::vector<SelectedPage> selected;
  for (const PageSample* page : train_pages)
    selected.push_back(make_selected(m, agent, norl.get(), *page, ecfg.k,
                                     ecfg.window_stride, ecfg.seed, 1));

  WriterVerify model(ecfg.wv);
  Rng rng(common.seed ^ 0x77765472ULL);
  model.init(rng);
  model.train(selected, rng.derive(1));

  // Freeze the decision threshold on the training style's validation split.
  const auto val_pages = pages_of(loaded.pages, loaded.split, SplitPart::val, st);
  std::vector<PageEmbedding> embs;
  std::vector<const PageSample*> used;
  for (const PageSample* page : val_pages) {
    embs.push_back(model.embed(make_selected(m, agent, norl.get(), *page, ecfg.k,
                                             ecfg.window_stride, ecfg.seed, 3)));
    used.push_back(page);
  }
  std::vector<double> same, diff;
  for (std::size_t i = 0; i < embs.size(); ++i)
    for (std::size_t j = i + 1; j < embs.size(); ++j)
      (used[i]->writer_id == used[j]->writer_id ? same : diff)
          .push_back(euclidean_distance(embs[i].values, embs[j].values));
  if (!same.empty() && !diff.empty())
    model.set_threshold(balanced_accuracy_sweep(same, diff).threshold);

  save_checkpoint(out, checkpoint_view(model.checkpoint_params()));
  std::printf("trained wv encoder on %zu pages, frozen t_d=%s -> %s\n",
              train_pages.size(), fmt(model.threshold()).c_str(), out.c_str());
  return 0;
}

int cmd_wv_eval(const CommonArgs& common, const std::string& dir,
                const std::string& agent_ckpt, const std::string& wv_ckpt,
                const std::string& style, const std::string& method,
                const std::string& records_path) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  AttentionAgent agent = load_agent(cfg, agent_ckpt);
  const ExperimentConfig ecfg =
      experiment_config(cfg, corpus_writer_count(loaded.pages), common.seed);
  const SelectionMethod m = method_from_name(method);

  std::unique_ptr<StandaloneScorer> norl;
  if (m == SelectionMethod::no_rl)
    norl = train_norl_scorer(cfg, loaded.pages, loaded.split, common.seed);

  WriterVerify model(ecfg.wv);
  {
    ParamRefs refs = model.checkpoint_params();
    load_checkpoint(wv_ckpt, refs);
  }

  const auto test_pages =
      pages_of(loaded.pages, loaded.split, SplitPart::test, style_from_name(style));
  const int repeats = m == SelectionMethod::rand_k ? ecfg.rand_repeats : 1;

  std::vector<std::string> lines;
  double acc = 0, tpr = 0, tnr = 0, thr = 0;
  for (int r = 0; r < repeats; ++r) {
    std::vector<PageEmbedding> embs;
    for (const PageSample* page : test_pages)
      embs.push_back(model.embed(make_selected(m, agent, norl.get(), *page,
                                               ecfg.k, ecfg.window_stride,
                                               ecfg.seed,
                                               4 + static_cast<std::uint64_t>(r))));
    std::vector<double> same, diff;
    for (std::size_t i = 0; i < embs.size(); ++i) {
      for (std::size_t j = i + 1; j < embs.size(); ++j) {
        const double dij = euclidean_distance(embs[i].values, embs[j].values);
        const bool is_same =
            test_pages[i]->writer_id == test_pages[j]->writer_id;
        (is_same ? same : diff).push_back(dij);
        if (r == 0) {
          const std::string pair_id = test_pages[i]->id + "|" + test_pages[j]->id;
          lines.push_back(pair_id + "," + test_pages[i]->id + "," +
                          test_pages[j]->id + "," + fmt(dij) + "," +
                          (is_same ? "same" : "different") + "," +
                          (dij <= model.threshold() ? "same" : "different"));
        }
      }
    }
    const SweepResult sweep = balanced_accuracy_sweep(same, diff);
    acc += sweep.accuracy;
    tpr += sweep.tpr;
    tnr += sweep.tnr;
    thr += sweep.threshold;
  }
  acc /= repeats;
  tpr /= repeats;
  tnr /= repeats;
  thr /= repeats;

  const std::string summary = "best_t_d=" + fmt(thr) + " tpr=" + fmt(tpr) +
                              " tnr=" + fmt(tnr) +
                              " balanced_accuracy=" + fmt(acc);
  if (!records_path.empty()) {
    lines.push_back(summary);
    write_lines(records_path, lines);
    write_lines(records_path + ".summary",
                {"task=wv method=" + std::string(method_name(m)) +
                 " test_style=" + style + " balanced_accuracy=" + fmt(acc) +
                 " tpr=" + fmt(tpr) + " tnr=" + fmt(tnr) +
                 " best_t_d=" + fmt(thr)});
  }
  std::printf("wv eval style=%s method=%s %s\n", style.c_str(), method_name(m),
              summary.c_str());
  return 0;
}

int cmd_ablate(const CommonArgs& common, const std::string& dir,
               const std::string& agent_ckpt, const std::string& method,
               const std::string& task, const std::string& style_a,
               const std::string& style_b, const std::string& out_prefix) {
  const Config cfg = common.config();
  auto loaded = load_corpus(dir);
  AttentionAgent agent = load_agent(cfg, agent_ckpt);
  ExperimentConfig ecfg =
      experiment_config(cfg, corpus_writer_count(loaded.pages), common.seed);
  ecfg.method = method_from_name(method);

  std::unique_ptr<StandaloneScorer> norl;
  if (ecfg.method == SelectionMethod::no_rl)
    norl = train_norl_scorer(cfg, loaded.pages, loaded.split, common.seed);

  const Style a = style_from_name(style_a);
  const Style b = style_from_name(style_b);

  double ab = 0.0, ba = 0.0;
  if (task == "wi") {
    ab = run_wi_directed(loaded.pages, loaded.split, agent, norl.get(), a, b, ecfg).top1;
    ba = run_wi_directed(loaded.pages, loaded.split, agent, norl.get(), b, a, ecfg).top1;
  } else if (task == "wv") {
    ab = run_wv_directed(loaded.pages, loaded.split, agent, norl.get(), a, b, ecfg)
             .sweep.accuracy;
    ba = run_wv_directed(loaded.pages, loaded.split, agent, norl.get(), b, a, ecfg)
             .sweep.accuracy;
  } else {
    throw std::runtime_error("task must be wi or wv");
  }
  const double ae = 0.5 * (ab + ba);

  const std::string line = "task=" + task + " method=" + method +
                           " style_a=" + style_a + " style_b=" + style_b +
                           " ae=" + fmt(ae) + " ab=" + fmt(ab) +
                           " ba=" + fmt(ba);
  if (!out_prefix.empty()) write_lines(out_prefix + ".summary", {line});
  std::printf("%s\n", line.c_str());
  return 0;
}

int cmd_report(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".summary")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) {
    std::printf("no .summary files under %s\n", dir.c_str());
    return 0;
  }
  std::printf("%-4s %-9s %-22s %s\n", "task", "method", "styles", "result");
  std::printf("%.*s\n", 64, "----------------------------------------------------------------");
  for (const auto& file : files) {
    std::ifstream is(file);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      std::map<std::string, std::string> kv;
      std::stringstream ss(line);
      std::string tok;
      while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq != std::string::npos) kv[tok.substr(0, eq)] = tok.substr(eq + 1);
      }
      std::string styles = kv.count("style_a")
                               ? kv["style_a"] + "->" + kv["style_b"]
                               : "test=" + kv["test_style"];
      std::string result;
      for (const char* key : {"ae", "ab", "ba", "top1", "top2", "top5",
                              "balanced_accuracy", "tpr", "tnr", "best_t_d"})
        if (kv.count(key)) result += std::string(key) + "=" + kv[key] + " ";
      std::printf("%-4s %-9s %-22s %s\n", kv["task"].c_str(),
                  kv["method"].c_str(), styles.c_str(), result.c_str());
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"idiosyncrasy-driven writer inspection"};
  app.require_subcommand(1);

  std::string backend;
  app.add_option("--kernel-backend", backend, "force scalar|avx2 kernels");

  // corpus
  auto* corpus = app.add_subcommand("corpus", "synthetic corpus management");
  corpus->require_subcommand(1);
  CommonArgs gen_args;
  std::string gen_out = "corpus";
  int gen_aug = 0;
  double gen_drop = 0.15;
  auto* gen = corpus->add_subcommand("gen", "generate pages, manifest, scores");
  add_common(gen, &gen_args);
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--n-aug", gen_aug, "drop-stroke augments per page");
  gen->add_option("--drop-fraction", gen_drop, "stroke drop fraction");

  CommonArgs split_args;
  std::string split_dir = "corpus";
  auto* split = corpus->add_subcommand("split", "assign 2:1:1 splits in-place");
  add_common(split, &split_args);
  split->add_option("--dir", split_dir, "corpus directory");

  // agent
  auto* agent_cmd = app.add_subcommand("agent", "attention agent");
  agent_cmd->require_subcommand(1);
  CommonArgs at_args;
  std::string at_dir = "corpus", at_out = "agent.ckpt", at_log;
  auto* at = agent_cmd->add_subcommand("train", "train on the train split");
  add_common(at, &at_args);
  at->add_option("--dir", at_dir, "corpus directory");
  at->add_option("--out", at_out, "checkpoint path");
  at->add_option("--log", at_log, "training log path");

  CommonArgs as_args;
  std::string as_dir = "corpus", as_agent = "agent.ckpt", as_out = "selections.csv";
  int as_k = 16;
  auto* as = agent_cmd->add_subcommand("select", "emit top-k patches per page");
  add_common(as, &as_args);
  as->add_option("--dir", as_dir, "corpus directory");
  as->add_option("--agent", as_agent, "agent checkpoint");
  as->add_option("--k", as_k, "patches per page");
  as->add_option("--out", as_out, "selections file");

  // wi
  auto* wi = app.add_subcommand("wi", "writer identification");
  wi->require_subcommand(1);
  CommonArgs wit_args;
  std::string wit_dir = "corpus", wit_agent = "agent.ckpt", wit_style = "slow";
  std::string wit_method = "proposed", wit_out = "wi.ckpt";
  auto* wit = wi->add_subcommand("train", "train the per-patch classifier");
  add_common(wit, &wit_args);
  wit->add_option("--dir", wit_dir, "corpus directory");
  wit->add_option("--agent", wit_agent, "agent checkpoint");
  wit->add_option("--style", wit_style, "training style (slow|medium|fast)");
  wit->add_option("--method", wit_method, "patch selection method");
  wit->add_option("--out", wit_out, "checkpoint path");

  CommonArgs wie_args;
  std::string wie_dir = "corpus", wie_agent = "agent.ckpt", wie_wi = "wi.ckpt";
  std::string wie_style = "medium", wie_method = "proposed", wie_records;
  auto* wie = wi->add_subcommand("eval", "evaluate on a style's test split");
  add_common(wie, &wie_args);
  wie->add_option("--dir", wie_dir, "corpus directory");
  wie->add_option("--agent", wie_agent, "agent checkpoint");
  wie->add_option("--wi", wie_wi, "wi checkpoint");
  wie->add_option("--style", wie_style, "test style");
  wie->add_option("--method", wie_method, "patch selection method");
  wie->add_option("--records", wie_records, "per-page record file");

  // wv
  auto* wv = app.add_subcommand("wv", "writer verification");
  wv->require_subcommand(1);
  CommonArgs wvt_args;
  std::string wvt_dir = "corpus", wvt_agent = "agent.ckpt", wvt_style = "slow";
  std::string wvt_method = "proposed", wvt_out = "wv.ckpt";
  auto* wvt = wv->add_subcommand("train", "triplet-train the embedding encoder");
  add_common(wvt, &wvt_args);
  wvt->add_option("--dir", wvt_dir, "corpus directory");
  wvt->add_option("--agent", wvt_agent, "agent checkpoint");
  wvt->add_option("--style", wvt_style, "training style");
  wvt->add_option("--method", wvt_method, "patch selection method");
  wvt->add_option("--out", wvt_out, "checkpoint path");

  CommonArgs wve_args;
  std::string wve_dir = "corpus", wve_agent = "agent.ckpt", wve_wv = "wv.ckpt";
  std::string wve_style = "medium", wve_method = "proposed", wve_records;
  auto* wve = wv->add_subcommand("eval", "evaluate pairs on a style's test split");
  add_common(wve, &wve_args);
  wve->add_option("--dir", wve_dir, "corpus directory");
  wve->add_option("--agent", wve_agent, "agent checkpoint");
  wve->add_option("--wv", wve_wv, "wv checkpoint");
  wve->add_option("--style", wve_style, "test style");
  wve->add_option("--method", wve_method, "patch selection method");
  wve->add_option("--records", wve_records, "per-pair record file");

  // ablate
  auto* ablate = app.add_subcommand("ablate", "selection ablations");
  ablate->require_subcommand(1);
  struct AblateArgs {
    CommonArgs common;
    std::string dir = "corpus", agent = "agent.ckpt", task = "wi";
    std::string style_a = "slow", style_b = "medium", out;
  };
  AblateArgs ab_rand, ab_all, ab_norl;
  auto add_ablate = [&](const char* name, const char* desc, AblateArgs* args) {
    auto* cmd = ablate->add_subcommand(name, desc);
    add_common(cmd, &args->common);
    cmd->add_option("--dir", args->dir, "corpus directory");
    cmd->add_option("--agent", args->agent, "agent checkpoint");
    cmd->add_option("--task", args->task, "wi or wv");
    cmd->add_option("--style-a", args->style_a, "first style");
    cmd->add_option("--style-b", args->style_b, "second style");
    cmd->add_option("--out", args->out, "summary file prefix");
    return cmd;
  };
  auto* abr = add_ablate("rand", "k random patches (eval repeats averaged)", &ab_rand);
  auto* aba = add_ablate("all", "all sliding-window patches", &ab_all);
  auto* abn = add_ablate("norl", "top-k by the GRU-free window scorer", &ab_norl);

  // report
  auto* report = app.add_subcommand("report", "collect .summary files into a table");
  std::string report_dir = ".";
  report->add_option("--dir", report_dir, "directory to scan");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!backend.empty()) {
      kern::set_backend(backend == "avx2" ? kern::Backend::avx2
                                          : kern::Backend::scalar);
    }
    if (gen->parsed()) return cmd_corpus_gen(gen_args, gen_out, gen_aug, gen_drop);
    if (split->parsed()) return cmd_corpus_split(split_args, split_dir);
    if (at->parsed()) return cmd_agent_train(at_args, at_dir, at_out, at_log);
    if (as->parsed()) return cmd_agent_select(as_args, as_dir, as_agent, as_k, as_out);
    if (wit->parsed())
      return cmd_wi_train(wit_args, wit_dir, wit_agent, wit_style, wit_method, wit_out);
    if (wie->parsed())
      return cmd_wi_eval(wie_args, wie_dir, wie_agent, wie_wi, wie_style,
                         wie_method, wie_records);
    if (wvt->parsed())
      return cmd_wv_train(wvt_args, wvt_dir, wvt_agent, wvt_style, wvt_method, wvt_out);
    if (wve->parsed())
      return cmd_wv_eval(wve_args, wve_dir, wve_agent, wve_wv, wve_style,
                         wve_method, wve_records);
    if (abr->parsed())
      return cmd_ablate(ab_rand.common, ab_rand.dir, ab_rand.agent, "rand",
                        ab_rand.task, ab_rand.style_a, ab_rand.style_b, ab_rand.out);
    if (aba->parsed())
      return cmd_ablate(ab_all.common, ab_all.dir, ab_all.agent, "all",
                        ab_all.task, ab_all.style_a, ab_all.style_b, ab_all.out);
    if (abn->parsed())
      return cmd_ablate(ab_norl.common, ab_norl.dir, ab_norl.agent, "norl",
                        ab_norl.task, ab_norl.style_a, ab_norl.style_b, ab_norl.out);
    if (report->parsed()) return cmd_report(report_dir);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
