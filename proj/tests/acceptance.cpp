// Acceptance checks. One line per criterion; exit status is nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "oracles/oracles.hpp"
#include "sigver/sigver.hpp"
#include "test_util.hpp"

using namespace sigver;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome lsap_exactness() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> q(0, 100 * 1024);
  int mismatches = 0, total = 0;
  for (int n = 2; n <= 7; ++n) {
    for (int trial = 0; trial < 1000; ++trial) {
      CostMatrix m(n);
      std::vector<std::vector<double>> rows(n, std::vector<double>(n));
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) rows[r][c] = m(r, c) = q(rng) / 1024.0;
      ++total;
      if (solve(m).total_cost != oracle::min_assignment(rows)) ++mismatches;
    }
  }
  const double secs = seconds_since(t0);
  return {mismatches == 0 && secs < 30.0,
          std::to_string(total - mismatches) + "/" + std::to_string(total) + " exact, " + fmt("%.2fs", secs)};
}

Outcome ged_bound_check() {
  const auto t0 = Clock::now();
  const CostParams p{25, 45};
  std::mt19937_64 rng(2002);
  int ok = 0;
  const int pairs = 200;
  double worst_gap = -1e300;
  for (int k = 0; k < pairs; ++k) {
    const auto g1 = oracle::random_graph(rng, 6), g2 = oracle::random_graph(rng, 6);
    const auto r = ged(g1, g2, p);
    const double exact = oracle::exact_ged(g1, g2, p.c_node, p.c_edge);
    worst_gap = std::max(worst_gap, r.lower_bound - exact);
    // 1e-9 absorbs summation order differences between solver and oracle
    if (r.lower_bound <= exact + 1e-9 && r.lower_bound <= r.max_ged + 1e-9 && r.normalized >= 0.0 &&
        r.normalized <= 1.0)
      ++ok;
  }
  const double secs = seconds_since(t0);
  return {ok == pairs && secs < 120.0, std::to_string(ok) + "/" + std::to_string(pairs) +
                                           " pairs, max(lb - exact) " + fmt("%.3g", worst_gap) + ", " +
                                           fmt("%.2fs", secs)};
}

Outcome ged_metric_sanity() {
  SynthConfig cfg;
  cfg.users = 10;
  cfg.genuine_per_user = 5;
  cfg.skilled_per_user = 1;
  cfg.seed = 303;
  std::vector<GrayImage> images;
  for (int u = 0; u < cfg.users; ++u)
    for (auto& img : synthesize_user(cfg, u).genuine) images.push_back(std::move(img));
  std::vector<KeypointGraph> graphs(images.size());
  parallel_for(images.size(), [&](std::size_t i) { graphs[i] = graph_from_image(images[i]); });
  std::mt19937_64 rng(3003);
  std::uniform_int_distribution<std::size_t> pick(0, images.size() - 1);
  int ok = 0;
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    const double self = dissimilarity_ged(graphs[a], graphs[a], {});
    const double ab = dissimilarity_ged(graphs[a], graphs[b], {}), ba = dissimilarity_ged(graphs[b], graphs[a], {});
    worst = std::max(worst, std::abs(ab - ba));
    if (self == 0.0 && std::abs(ab - ba) <= 1e-9) ++ok;
  }
  return {ok == 50, std::to_string(ok) + "/50 pairs, max asymmetry " + fmt("%.3g", worst)};
}

// ---------------------------------------------------------------------------

struct GradStats {
  std::size_t checked = 0, passed = 0;
};

GradStats finite_difference_check(EmbeddingModel& m, const std::vector<std::vector<double>>& inputs,
                                  const std::vector<Triplet>& triplets, double margin,
                                  const std::vector<std::size_t>& which) {
  const auto analytic = batch_loss(m, inputs, triplets, margin, true).gradient;
  auto p = m.parameters();
  const double h = 1e-4;
  GradStats s;
  for (std::size_t k : which) {
    const double keep = p[k];
    p[k] = keep + h;
    const double up = batch_loss(m, inputs, triplets, margin, false).loss;
    p[k] = keep - h;
    const double down = batch_loss(m, inputs, triplets, margin, false).loss;
    p[k] = keep;
    const double numeric = (up - down) / (2 * h);
    const double scale = std::max(std::abs(numeric), std::abs(analytic[k]));
    ++s.checked;
    if (scale < 1e-8 || std::abs(numeric - analytic[k]) / scale <= 1e-3) ++s.passed;
  }
  return s;
}

Outcome gradient_check() {
  // default architecture on real signature inputs
  SynthConfig cfg;
  cfg.users = 3;
  cfg.genuine_per_user = 2;
  cfg.skilled_per_user = 1;
  cfg.seed = 404;
  std::vector<std::vector<double>> inputs;
  for (int u = 0; u < cfg.users; ++u)
    for (const auto& img : synthesize_user(cfg, u).genuine) inputs.push_back(nn::to_network_input(img, 32));
  EmbeddingModel m(nn::Architecture::default_arch());
  m.initialize(405);
  // orient each triplet so its slack (d- minus d+) is positive
  std::vector<Triplet> triplets{{0, 1, 2}, {2, 3, 4}, {4, 5, 0}};
  std::vector<double> slack;
  for (auto& t : triplets) {
    const auto a = m.forward(inputs[t.anchor]);
    double sl = embedding_distance(a, m.forward(inputs[t.negative])) -
                embedding_distance(a, m.forward(inputs[t.positive]));
    if (sl < 0) {
      std::swap(t.positive, t.negative);
      sl = -sl;
    }
    slack.push_back(sl);
  }
  std::sort(slack.begin(), slack.end());
  const double all_active = slack.back() + 1.0;
  const double mixed = 0.5 * (slack[0] + slack[1]);  // one active, two inactive
  const double none_active = 0.5 * slack[0];

  // every parameter of every layer would take hours here; a seeded subset
  // of 2000 covers all layers in proportion to their size
  std::vector<std::size_t> subset(m.parameter_count());
  std::iota(subset.begin(), subset.end(), 0);
  std::mt19937_64 rng(406);
  std::shuffle(subset.begin(), subset.end(), rng);
  subset.resize(2000);

  std::string detail;
  bool pass = true;
  const std::pair<const char*, double> cases[] = {{"active", all_active}, {"mixed", mixed}, {"inactive", none_active}};
  for (const auto& [name, margin] : cases) {
    const auto s = finite_difference_check(m, inputs, triplets, margin, subset);
    const double frac = static_cast<double>(s.passed) / static_cast<double>(s.checked);
    pass &= frac >= 0.99;
    detail += std::string(name) + " " + std::to_string(s.passed) + "/" + std::to_string(s.checked) + "; ";
  }
  const auto g = batch_loss(m, inputs, triplets, none_active, true).gradient;
  const bool zero = std::all_of(g.begin(), g.end(), [](double v) { return v == 0.0; });
  pass &= zero;
  detail += std::string("inactive gradient ") + (zero ? "zero" : "NONZERO") + "; ";

  // small network, every parameter
  EmbeddingModel small(nn::Architecture::parse("conv:3:3,relu,pool:2,conv:4:3,relu,pool:2,fc:8,relu,fc:4", 16));
  small.initialize(407);
  std::vector<std::vector<double>> small_inputs;
  for (int u = 0; u < cfg.users; ++u)
    for (const auto& img : synthesize_user(cfg, u).genuine) small_inputs.push_back(nn::to_network_input(img, 16));
  std::vector<std::size_t> all(small.parameter_count());
  std::iota(all.begin(), all.end(), 0);
  const std::vector<Triplet> small_triplets{{0, 1, 2}, {2, 3, 4}, {4, 5, 0}};
  const auto s = finite_difference_check(small, small_inputs, small_triplets, 10.0, all);
  pass &= static_cast<double>(s.passed) >= 0.99 * static_cast<double>(s.checked);
  detail += "small net all params " + std::to_string(s.passed) + "/" + std::to_string(s.checked);
  return {pass, detail};
}

// ---------------------------------------------------------------------------

std::vector<std::vector<GrayImage>> synthetic_genuines(std::uint64_t seed, int users = 10, int per_user = 24) {
  SynthConfig cfg;
  cfg.users = users;
  cfg.genuine_per_user = per_user;
  cfg.skilled_per_user = 1;
  cfg.seed = seed;
  std::vector<std::vector<GrayImage>> out(users);
  parallel_for(users, [&](std::size_t u) { out[u] = synthesize_user(cfg, static_cast<int>(u)).genuine; });
  return out;
}

struct TrainedModel {
  TrainResult result;
  double seconds = 0.0;
};

// Training users are drawn with their own seed, disjoint from the benchmark.
constexpr std::uint64_t kTrainSeed = 2;
constexpr std::uint64_t kBenchmarkSeed = 1;

Outcome trainability(TrainedModel& out) {
  const auto users = synthetic_genuines(kTrainSeed);
  TrainConfig c;  // 16 / 8 split, 50 epochs
  auto t0 = Clock::now();
  out.result = train(users, c);
  out.seconds = seconds_since(t0);
  const auto& h = out.result.history;
  double best = h.front().val_loss;
  int best_epoch = 0;
  for (const auto& e : h)
    if (e.val_loss < best) best = e.val_loss, best_epoch = e.epoch;
  const double v0 = h.front().val_loss;
  const bool drop = best <= 0.5 * v0;

  const auto again = train(users, c);
  bool same = again.best_epoch == out.result.best_epoch && again.history.size() == h.size();
  for (std::size_t i = 0; same && i < h.size(); ++i)
    same = again.history[i].val_loss == h[i].val_loss &&
           (std::isnan(h[i].train_loss) || again.history[i].train_loss == h[i].train_loss);
  const auto pa = again.model.parameters();
  const auto pb = out.result.model.parameters();
  same = same && std::equal(pa.begin(), pa.end(), pb.begin(), pb.end());

  return {drop && same, "val loss " + fmt("%.4f", v0) + " -> " + fmt("%.4f", best) + " (epoch " +
                            std::to_string(best_epoch) + ", " + fmt("%.0f%% drop", 100.0 * (1.0 - best / v0)) +
                            "), bitwise reproducible: " + (same ? "yes" : "no") + ", " +
                            fmt("%.1fs per run", out.seconds)};
}

// ---------------------------------------------------------------------------

Outcome protocol_counts() {
  testutil::TempDir dir("gpds75");
  SynthConfig cfg;
  cfg.users = 75;
  cfg.genuine_per_user = 24;
  cfg.skilled_per_user = 30;
  cfg.width = 48;
  cfg.height = 24;
  cfg.strokes = 1;
  generate_synthetic(cfg, dir.path());
  const auto ds = load_dataset(dir.path());
  const ImageCatalog cat(ds);
  Protocol p;
  p.reference_count = 10;
  p.forgery_mode = ForgeryMode::kSkilled;
  const auto sf = count(split_protocol(cat, p));
  p.forgery_mode = ForgeryMode::kRandom;
  const auto rf = count(split_protocol(cat, p));
  const bool ok = sf.references == 750 && sf.genuine_tests == 1050 && sf.forgeries == 2250 && rf.forgeries == 5550;
  return {ok, "refs " + std::to_string(sf.references) + ", genuine " + std::to_string(sf.genuine_tests) +
                  ", skilled " + std::to_string(sf.forgeries) + ", random " + std::to_string(rf.forgeries)};
}

Outcome eer_properties() {
  bool ok = true;
  std::string detail;
  const std::vector<double> sep_g(50, 0.1), sep_f(50, 0.9);
  const double e0 = compute_eer(sep_g, sep_f).eer;
  ok &= e0 == 0.0;

  std::mt19937_64 rng(707);
  std::normal_distribution<double> n(2.0, 1.0);
  std::vector<double> g(10000), f(10000);
  for (auto& v : g) v = n(rng);
  for (auto& v : f) v = n(rng);
  const auto same = compute_eer(g, f);
  ok &= std::abs(same.eer - 0.5) <= 0.02;

  std::vector<double> g2(2000), f2(2000);
  for (auto& v : g2) v = n(rng);
  for (auto& v : f2) v = n(rng) + 1.0;
  const auto base = compute_eer(g2, f2);
  auto tg = g2, tf = f2;
  for (auto& v : tg) v = std::exp(v) * 3.0 + 1.0;
  for (auto& v : tf) v = std::exp(v) * 3.0 + 1.0;
  const bool invariant = compute_eer(tg, tf).eer == base.eer;
  ok &= invariant;

  bool monotone = true;
  for (const auto* curve : {&same.det, &base.det}) {
    const auto& pts = curve->points;
    for (std::size_t k = 1; k < pts.size(); ++k)
      monotone &= pts[k].far >= pts[k - 1].far && pts[k].frr <= pts[k - 1].frr;
  }
  ok &= monotone;
  detail = "separated " + fmt("%g", e0) + ", same-distribution " + fmt("%.4f", same.eer) + ", transform " +
           (invariant ? "exact" : "changed") + ", DET " + (monotone ? "monotone" : "NOT monotone");
  return {ok, detail};
}

// ---------------------------------------------------------------------------

Outcome fusion_trend(const TrainedModel& trained) {
  const auto t0 = Clock::now();
  testutil::TempDir dir("benchmark");
  SynthConfig cfg;  // standard benchmark: 10 users, 24 genuine, 10 skilled
  cfg.seed = kBenchmarkSeed;
  const auto ds = generate_synthetic(cfg, dir.path());
  Evaluator ev(ds, {}, &trained.result.model);
  int wins = 0;
  std::string detail;
  for (int refs : {5, 10}) {
    for (auto mode : {ForgeryMode::kSkilled, ForgeryMode::kRandom}) {
      Protocol p;
      p.reference_count = refs;
      p.forgery_mode = mode;
      const double eg = ev.run_protocol(p, SystemKind::kGed).eer;
      const double en = ev.run_protocol(p, SystemKind::kNeural).eer;
      const double em = ev.run_protocol(p, SystemKind::kMcs).eer;
      const bool win = em <= std::min(eg, en) + 0.02;
      wins += win;
      char buf[160];
      std::snprintf(buf, sizeof buf, "R%d%s ged %.3f nn %.3f mcs %.3f%s; ", refs,
                    mode == ForgeryMode::kSkilled ? "SF" : "RF", eg, en, em, win ? "" : " (miss)");
      detail += buf;
    }
  }
  const double eval_secs = seconds_since(t0);
  const double total = eval_secs + trained.seconds;
  detail += std::to_string(wins) + "/4 cells, " + fmt("%.0fs", total) + " incl. training";
  return {wins >= 3 && total < 600.0, detail};
}

Outcome grid_search() {
  testutil::TempDir dir("grid");
  SynthConfig cfg;
  cfg.users = 5;
  cfg.genuine_per_user = 8;
  cfg.skilled_per_user = 2;
  cfg.seed = 909;
  const auto ds = generate_synthetic(cfg, dir.path());
  const auto grid = default_cost_grid();
  Protocol p;
  p.reference_count = 5;
  Evaluator ev(ds, {});
  const auto a = grid_search_costs(ev, grid, grid, p);
  Evaluator fresh(ds, {});
  const auto b = grid_search_costs(fresh, grid, grid, p);
  const auto csv = dir.path() / "grid.csv";
  write_grid_csv(csv, a);
  std::ifstream is(csv);
  std::string line;
  std::getline(is, line);
  const bool header = line == "c_node,c_edge,eer";
  int rows = 0;
  while (std::getline(is, line))
    if (std::count(line.begin(), line.end(), ',') == 2) ++rows;
  const bool ok = a.entries.size() == 121 && rows == 121 && header && a.best.c_node == b.best.c_node &&
                  a.best.c_edge == b.best.c_edge && a.best.eer == b.best.eer;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu evaluations, %d csv rows, argmin (%g, %g) eer %.4f, repeat identical: %s",
                a.entries.size(), rows, a.best.c_node, a.best.c_edge, a.best.eer,
                a.best.c_node == b.best.c_node && a.best.c_edge == b.best.c_edge ? "yes" : "no");
  return {ok, buf};
}

Outcome scale_invariance() {
  std::mt19937_64 rng(1010);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  const int users = 6, per_user = 9, refs = 5;
  const int n = users * per_user;
  std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0)), e(n, std::vector<double>(n, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      d[i][j] = d[j][i] = u(rng);
      e[i][j] = e[j][i] = u(rng);
    }
  const double k = 7.3;
  Dissimilarity dg = [&](int a, int b) { return d[a][b]; }, dn = [&](int a, int b) { return e[a][b]; };
  Dissimilarity sg = [&](int a, int b) { return k * d[a][b]; }, sn = [&](int a, int b) { return k * e[a][b]; };

  std::vector<UserTemplate> base, scaled;
  for (int v = 0; v < users; ++v) {
    std::vector<int> r;
    for (int i = 0; i < refs; ++i) r.push_back(v * per_user + i);
    base.push_back(make_template("u", r, dg, dn));
    scaled.push_back(make_template("u", r, sg, sn));
  }
  const auto st = fusion_stats(base, dg, dn), ss = fusion_stats(scaled, sg, sn);
  double worst = 0.0;
  int flips = 0, decisions = 0;
  for (int v = 0; v < users; ++v) {
    for (int t = 0; t < n; ++t) {
      if (t >= v * per_user && t < v * per_user + refs) continue;
      const double a = verification_score(base[v].references, base[v].delta_ged, t, dg);
      const double b = verification_score(scaled[v].references, scaled[v].delta_ged, t, sg);
      const double ma = mcs_score(base[v], t, dg, dn, st), mb = mcs_score(scaled[v], t, sg, sn, ss);
      worst = std::max({worst, std::abs(a - b), std::abs(ma - mb)});
      double raw = std::numeric_limits<double>::infinity(), raw_scaled = raw;
      for (int r : base[v].references) {
        raw = std::min(raw, dg(r, t));
        raw_scaled = std::min(raw_scaled, sg(r, t));
      }
      for (double theta : {0.3, 0.7, 1.0, 1.6}) {
        decisions += 3;
        flips += decide(a, theta) != decide(b, theta);
        flips += decide(raw, theta) != decide(raw_scaled, k * theta);
        flips += decide(ma, theta - 2.0) != decide(mb, theta - 2.0);
      }
    }
  }
  return {flips == 0 && worst <= 1e-9, std::to_string(flips) + " of " + std::to_string(decisions) +
                                           " decisions changed, max normalized-score change " + fmt("%.3g", worst)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %s  %-26s %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  };
  TrainedModel trained;
  report(1, "lsap-exactness", lsap_exactness);
  report(2, "ged-lower-bound", ged_bound_check);
  report(3, "ged-metric-sanity", ged_metric_sanity);
  report(4, "triplet-gradient-check", gradient_check);
  report(5, "trainability", [&] { return trainability(trained); });
  report(6, "protocol-counts", protocol_counts);
  report(7, "eer-properties", eer_properties);
  report(8, "fusion-trend", [&] { return fusion_trend(trained); });
  report(9, "grid-search", grid_search);
  report(10, "score-scale-invariance", scale_invariance);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
