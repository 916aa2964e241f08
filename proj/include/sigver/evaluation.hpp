#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sigver/dataset.hpp"
#include "sigver/eer.hpp"
#include "sigver/ged.hpp"
#include "sigver/parallel.hpp"
#include "sigver/png_io.hpp"
#include "sigver/score_cache.hpp"
#include "sigver/scoring.hpp"
#include "sigver/triplet.hpp"

namespace sigver {

enum class ForgeryMode { kSkilled, kRandom };
enum class ReferenceSelection { kFirstK, kRandomSeeded };
enum class SystemKind { kGed, kNeural, kMcs };

inline const char* to_string(SystemKind s) {
  switch (s) {
    case SystemKind::kGed: return "ged";
    case SystemKind::kNeural: return "neural";
    case SystemKind::kMcs: return "mcs";
  }
  return "?";
}

struct Protocol {
  int reference_count = 10;
  ForgeryMode forgery_mode = ForgeryMode::kSkilled;
  ReferenceSelection selection = ReferenceSelection::kFirstK;
  int runs = 1;
  std::uint64_t seed = 0;
};

enum class SampleLabel { kGenuine, kSkilled, kRandom };

inline const char* to_string(SampleLabel l) {
  switch (l) {
    case SampleLabel::kGenuine: return "genuine";
    case SampleLabel::kSkilled: return "skilled";
    case SampleLabel::kRandom: return "random";
  }
  return "?";
}

/// Flat numbering of every image of a dataset: each user's genuine images
/// followed by that user's skilled forgeries.
class ImageCatalog {
 public:
  explicit ImageCatalog(const SignatureDataset& ds) {
    for (std::size_t u = 0; u < ds.users.size(); ++u) {
      std::vector<int> g, f;
      for (const auto& p : ds.users[u].genuine) {
        g.push_back(static_cast<int>(paths_.size()));
        paths_.push_back(p);
      }
      for (const auto& p : ds.users[u].skilled_forgeries) {
        f.push_back(static_cast<int>(paths_.size()));
        paths_.push_back(p);
      }
      genuine_.push_back(std::move(g));
      forgery_.push_back(std::move(f));
      user_ids_.push_back(ds.users[u].id);
    }
    root_ = ds.root;
  }

  int user_count() const { return static_cast<int>(genuine_.size()); }
  int image_count() const { return static_cast<int>(paths_.size()); }
  const std::vector<int>& genuine(int user) const { return genuine_[user]; }
  const std::vector<int>& forgeries(int user) const { return forgery_[user]; }
  const std::string& user_id(int user) const { return user_ids_[user]; }
  const fs::path& path(int image) const { return paths_[image]; }

  /// Path relative to the dataset root without extension, e.g. `u001/genuine/03`.
  std::string signature_id(int image) const {
    auto rel = paths_[image].lexically_relative(root_);
    if (rel.empty()) rel = paths_[image];
    rel.replace_extension();
    return rel.generic_string();
  }

 private:
  fs::path root_;
  std::vector<fs::path> paths_;
  std::vector<std::vector<int>> genuine_, forgery_;
  std::vector<std::string> user_ids_;
};

struct TestSample {
  int image = 0;
  SampleLabel label = SampleLabel::kGenuine;
};

struct UserSplit {
  int user = 0;
  std::vector<int> references;
  std::vector<int> genuine_tests;
  std::vector<TestSample> forgery_tests;
};

struct SplitCounts {
  std::size_t references = 0;
  std::size_t genuine_tests = 0;
  std::size_t forgeries = 0;
};

inline SplitCounts count(const std::vector<UserSplit>& splits) {
  SplitCounts c;
  for (const auto& s : splits) {
    c.references += s.references.size();
    c.genuine_tests += s.genuine_tests.size();
    c.forgeries += s.forgery_tests.size();
  }
  return c;
}

/// References, remaining genuine tests and forgeries per user. Random
/// reference subsets depend only on (seed, run, user), so every system
/// evaluated with the same protocol sees the same selections.
inline std::vector<UserSplit> split_protocol(const ImageCatalog& cat, const Protocol& p, int run = 0) {
  if (p.reference_count < 1 || p.runs < 1) throw Error(ErrorCode::kInvalidArgument, "bad protocol");
  std::vector<UserSplit> out;
  for (int u = 0; u < cat.user_count(); ++u) {
    const auto& g = cat.genuine(u);
    if (static_cast<int>(g.size()) <= p.reference_count) {
      throw Error(ErrorCode::kInsufficientGenuines,
                  "user " + cat.user_id(u) + " has " + std::to_string(g.size()) + " genuine signatures");
    }
    std::vector<std::size_t> order(g.size());
    std::iota(order.begin(), order.end(), 0);
    if (p.selection == ReferenceSelection::kRandomSeeded) {
      std::seed_seq seq{static_cast<std::uint32_t>(p.seed), static_cast<std::uint32_t>(p.seed >> 32),
                        static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(u)};
      std::mt19937_64 rng(seq);
      std::shuffle(order.begin(), order.end(), rng);
      std::sort(order.begin(), order.begin() + p.reference_count);
      std::sort(order.begin() + p.reference_count, order.end());
    }
    UserSplit s{u, {}, {}, {}};
    for (std::size_t k = 0; k < order.size(); ++k) {
      (static_cast<int>(k) < p.reference_count ? s.references : s.genuine_tests).push_back(g[order[k]]);
    }
    if (p.forgery_mode == ForgeryMode::kSkilled) {
      for (int f : cat.forgeries(u)) s.forgery_tests.push_back({f, SampleLabel::kSkilled});
    } else {
      for (int v = 0; v < cat.user_count(); ++v) {
        if (v != u) s.forgery_tests.push_back({cat.genuine(v).front(), SampleLabel::kRandom});
      }
    }
    out.push_back(std::move(s));
  }
  return out;
}

/// One line of the score dump. Unavailable classifiers hold NaN.
struct ScoreRow {
  std::string user_id;
  std::string signature_id;
  SampleLabel label = SampleLabel::kGenuine;
  double d_ged = std::numeric_limits<double>::quiet_NaN();
  double d_neural = std::numeric_limits<double>::quiet_NaN();
  double score_ged = std::numeric_limits<double>::quiet_NaN();
  double score_neural = std::numeric_limits<double>::quiet_NaN();
  double score_mcs = std::numeric_limits<double>::quiet_NaN();
};

struct EvalResult {
  double eer = 0.0;  // mean over runs
  double threshold = 0.0;  // EER threshold of the first run
  DetCurve det;      // first run
  std::vector<double> run_eers;
  SplitCounts counts;  // first run
  std::vector<ScoreRow> rows;  // first run
  std::vector<UserScores> user_scores;  // first run, raw system scores
};

struct EvalSettings {
  CostParams costs;
  GraphExtractionParams extraction;
  /// A-posteriori per-user alignment of EER thresholds before pooling.
  bool user_normalization = false;
  unsigned threads = 0;
};

/// Scores a dataset under the evaluation protocols. Images, keypoint graphs
/// and embeddings are computed once; pairwise graph distances go through a
/// score cache so repeated protocols and cost grids reuse them.
class Evaluator {
 public:
  Evaluator(const SignatureDataset& ds, EvalSettings settings, const EmbeddingModel* model = nullptr,
            std::shared_ptr<ScoreCache> cache = nullptr)
      : catalog_(ds), settings_(settings), model_(model),
        cache_(cache ? std::move(cache) : std::make_shared<ScoreCache>()) {}

  const ImageCatalog& catalog() const { return catalog_; }
  const EvalSettings& settings() const { return settings_; }
  ScoreCache& cache() { return *cache_; }
  bool has_model() const { return model_ != nullptr; }

  void set_costs(const CostParams& c) { settings_.costs = c; }

  /// Keypoint graphs and embeddings of every catalog image.
  void prepare(bool graphs, bool embeddings) {
    const int n = catalog_.image_count();
    if ((graphs && graphs_.empty()) || (embeddings && embeddings_.empty())) load_images();
    if (graphs && graphs_.empty()) {
      graphs_.resize(n);
      parallel_for(n, [&](std::size_t i) { graphs_[i] = graph_from_image(images_[i], settings_.extraction); },
                   settings_.threads);
    }
    if (embeddings && embeddings_.empty()) {
      if (!model_) throw Error(ErrorCode::kInvalidArgument, "neural system requires a trained model");
      embeddings_.resize(n);
      parallel_for(n, [&](std::size_t i) { embeddings_[i] = embed(*model_, images_[i]); }, settings_.threads);
    }
  }

  const KeypointGraph& graph(int image) {
    prepare(true, false);
    return graphs_[image];
  }

  double d_ged(int a, int b) {
    const auto k = ged_key(a, b);
    if (auto hit = cache_->find(k)) return *hit;
    prepare(true, false);
    const auto [x, y] = std::minmax(a, b);
    const double v = dissimilarity_ged(graphs_[x], graphs_[y], settings_.costs);
    cache_->insert(k, v);
    return v;
  }

  double d_neural(int a, int b) {
    prepare(false, true);
    return embedding_distance(embeddings_[a], embeddings_[b]);
  }

  /// Computes every missing graph distance among `pairs` in parallel.
  void prefetch_ged(const std::vector<std::pair<int, int>>& pairs) {
    std::vector<std::pair<int, int>> missing;
    for (auto [a, b] : pairs) {
      if (a > b) std::swap(a, b);
      if (!cache_->find(ged_key(a, b))) missing.emplace_back(a, b);
    }
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    if (missing.empty()) return;
    prepare(true, false);
    parallel_for(missing.size(), [&](std::size_t i) { d_ged(missing[i].first, missing[i].second); },
                 settings_.threads);
  }

  EvalResult run_protocol(const Protocol& p, SystemKind system) {
    const bool use_ged = system != SystemKind::kNeural;
    // Neural columns are filled whenever a model is present; they are cheap.
    const bool want_neural = system != SystemKind::kGed || model_ != nullptr;
    prepare(use_ged, want_neural);

    EvalResult result;
    for (int run = 0; run < p.runs; ++run) {
      const auto splits = split_protocol(catalog_, p, run);
      if (use_ged) prefetch_ged(needed_pairs(splits, system == SystemKind::kMcs));

      Dissimilarity dg, dn;
      if (use_ged) dg = [this](int a, int b) { return d_ged(a, b); };
      if (want_neural) dn = [this](int a, int b) { return d_neural(a, b); };

      std::vector<UserTemplate> templates;
      for (const auto& s : splits) templates.push_back(make_template(catalog_.user_id(s.user), s.references, dg, dn));
      FusionStats stats;
      if (system == SystemKind::kMcs) stats = fusion_stats(templates, dg, dn);

      std::vector<UserScores> per_user;
      std::vector<ScoreRow> rows;
      for (std::size_t u = 0; u < splits.size(); ++u) {
        const auto& tpl = templates[u];
        UserScores us;
        auto score_one = [&](int image, SampleLabel label) {
          ScoreRow row{tpl.user_id, catalog_.signature_id(image), label};
          if (dg) {
            row.d_ged = raw_min(tpl.references, image, dg);
            row.score_ged = verification_score(tpl.references, tpl.delta_ged, image, dg);
          }
          if (dn) {
            row.d_neural = raw_min(tpl.references, image, dn);
            row.score_neural = verification_score(tpl.references, tpl.delta_neural, image, dn);
          }
          if (system == SystemKind::kMcs) row.score_mcs = mcs_score(tpl, image, dg, dn, stats);
          const double s = system == SystemKind::kGed      ? row.score_ged
                           : system == SystemKind::kNeural ? row.score_neural
                                                           : row.score_mcs;
          (label == SampleLabel::kGenuine ? us.genuine : us.forgery).push_back(s);
          rows.push_back(std::move(row));
        };
        for (int g : splits[u].genuine_tests) score_one(g, SampleLabel::kGenuine);
        for (const auto& f : splits[u].forgery_tests) score_one(f.image, f.label);
        per_user.push_back(std::move(us));
      }

      EerResult eer;
      if (settings_.user_normalization) {
        const auto norm = aposteriori_user_norm(per_user);
        eer = pooled_eer(norm.normalized);
      } else {
        eer = pooled_eer(per_user);
      }
      result.run_eers.push_back(eer.eer);
      if (run == 0) {
        result.det = std::move(eer.det);
        result.threshold = eer.threshold;
        result.counts = count(splits);
        result.rows = std::move(rows);
        result.user_scores = std::move(per_user);
      }
    }
    result.eer = std::accumulate(result.run_eers.begin(), result.run_eers.end(), 0.0) /
                 static_cast<double>(result.run_eers.size());
    return result;
  }

 private:
  void load_images() {
    if (!images_.empty()) return;
    images_.resize(catalog_.image_count());
    parallel_for(images_.size(), [&](std::size_t i) { images_[i] = read_png(catalog_.path(i)); },
                 settings_.threads);
  }

  std::string ged_key(int a, int b) const {
    char tag[96];
    std::snprintf(tag, sizeof tag, "%a/%a/%a", settings_.costs.c_node, settings_.costs.c_edge,
                  settings_.extraction.sampling_d);
    return ScoreCache::key("ged", tag, catalog_.path(a).string(), catalog_.path(b).string());
  }

  static double raw_min(const std::vector<int>& refs, int image, const Dissimilarity& d) {
    double best = std::numeric_limits<double>::infinity();
    for (int r : refs) best = std::min(best, d(r, image));
    return best;
  }

  static EerResult pooled_eer(const std::vector<UserScores>& users) {
    std::vector<double> g, f;
    for (const auto& u : users) {
      g.insert(g.end(), u.genuine.begin(), u.genuine.end());
      f.insert(f.end(), u.forgery.begin(), u.forgery.end());
    }
    return compute_eer(g, f);
  }

  std::vector<std::pair<int, int>> needed_pairs(const std::vector<UserSplit>& splits, bool cross_user_refs) const {
    std::vector<std::pair<int, int>> pairs;
    for (const auto& s : splits) {
      for (std::size_t i = 0; i < s.references.size(); ++i) {
        for (std::size_t j = i + 1; j < s.references.size(); ++j) pairs.emplace_back(s.references[i], s.references[j]);
        for (int g : s.genuine_tests) pairs.emplace_back(s.references[i], g);
        for (const auto& f : s.forgery_tests) pairs.emplace_back(s.references[i], f.image);
      }
    }
    if (cross_user_refs) {
      for (std::size_t u = 0; u < splits.size(); ++u)
        for (std::size_t v = u + 1; v < splits.size(); ++v)
          for (int r : splits[u].references)
            for (int s : splits[v].references) pairs.emplace_back(r, s);
    }
    return pairs;
  }

  ImageCatalog catalog_;
  EvalSettings settings_;
  const EmbeddingModel* model_;
  std::shared_ptr<ScoreCache> cache_;
  std::vector<GrayImage> images_;
  std::vector<KeypointGraph> graphs_;
  std::vector<std::vector<double>> embeddings_;
};

struct GridEntry {
  double c_node = 0.0;
  double c_edge = 0.0;
  double eer = 0.0;
};

struct GridResult {
  std::vector<GridEntry> entries;  // c_node ascending, then c_edge ascending
  GridEntry best;
};

/// Evaluates the graph system under the random-forgery protocol for every
/// (c_node, c_edge) combination. Ties go to smaller c_node, then c_edge.
inline GridResult grid_search_costs(Evaluator& ev, std::vector<double> c_nodes, std::vector<double> c_edges,
                                    Protocol protocol) {
  if (c_nodes.empty() || c_edges.empty()) throw Error(ErrorCode::kInvalidArgument, "empty cost grid");
  if (ev.catalog().user_count() < 2) throw Error(ErrorCode::kInsufficientData, "grid search needs >= 2 users");
  std::sort(c_nodes.begin(), c_nodes.end());
  std::sort(c_edges.begin(), c_edges.end());
  protocol.forgery_mode = ForgeryMode::kRandom;
  const CostParams original = ev.settings().costs;
  GridResult out;
  for (double cn : c_nodes) {
    for (double ce : c_edges) {
      ev.set_costs({cn, ce});
      const double eer = ev.run_protocol(protocol, SystemKind::kGed).eer;
      out.entries.push_back({cn, ce, eer});
      if (out.entries.size() == 1 || eer < out.best.eer) out.best = out.entries.back();
    }
  }
  ev.set_costs(original);
  return out;
}

/// `{lo, lo+step, ..., hi}` inclusive.
inline std::vector<double> value_range(double lo, double hi, double step) {
  std::vector<double> v;
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be > 0");
  for (int k = 0; lo + k * step <= hi + 1e-9 * step; ++k) v.push_back(lo + k * step);
  return v;
}

/// The cost grid used for parameter validation: 10, 15, ..., 60 on both axes.
inline std::vector<double> default_cost_grid() { return value_range(10.0, 60.0, 5.0); }

}  // namespace sigver
