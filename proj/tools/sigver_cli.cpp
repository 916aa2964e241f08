// sigver: command line front end for the signature verification library.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "sigver/sigver.hpp"

namespace fs = std::filesystem;
using namespace sigver;

namespace {

Protocol make_protocol(const std::string& refs, const std::string& forgeries, int runs, std::uint64_t seed,
                       bool random_refs) {
  Protocol p;
  p.reference_count = refs == "r5" ? 5 : 10;
  p.forgery_mode = forgeries == "sf" ? ForgeryMode::kSkilled : ForgeryMode::kRandom;
  p.runs = runs;
  p.seed = seed;
  // several runs only differ if the references are drawn at random
  p.selection = random_refs || runs > 1 ? ReferenceSelection::kRandomSeeded : ReferenceSelection::kFirstK;
  return p;
}

// "a b c" or "lo:hi:step"
std::vector<double> parse_values(const std::string& text) {
  if (text.find(':') != std::string::npos) {
    double lo = 0, hi = 0, step = 0;
    char c1 = 0, c2 = 0;
    std::istringstream is(text);
    if (!(is >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':')
      throw Error(ErrorCode::kInvalidArgument, "bad range: " + text);
    return value_range(lo, hi, step);
  }
  std::vector<double> out;
  std::istringstream is(text);
  for (std::string tok; is >> tok;) {
    if (!tok.empty() && tok.back() == ',') tok.pop_back();
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::kInvalidArgument, "bad grid value: " + tok);
    }
  }
  return out;
}

CostMatrix read_matrix(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCode::kMissingFile, path.string());
  int n = -1;
  if (!(is >> n) || n < 0) throw Error(ErrorCode::kInvalidArgument, "matrix file must start with its size");
  CostMatrix m(n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      std::string tok;
      if (!(is >> tok)) throw Error(ErrorCode::kInvalidArgument, "matrix file is short");
      m(r, c) = tok == "x" ? kForbiddenCost : std::strtod(tok.c_str(), nullptr);
    }
  }
  return m;
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + p.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Offline signature verification: keypoint graphs, triplet embeddings, evaluation"};
  app.require_subcommand(1);

  // gen-synth
  SynthConfig synth;
  std::string synth_out;
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic signature dataset");
  gen->add_option("--users", synth.users)->capture_default_str();
  gen->add_option("--genuine", synth.genuine_per_user)->capture_default_str();
  gen->add_option("--forgeries", synth.skilled_per_user)->capture_default_str();
  gen->add_option("--strokes", synth.strokes)->capture_default_str();
  gen->add_option("--jitter", synth.jitter)->capture_default_str();
  gen->add_option("--forgery-noise", synth.forgery_noise)->capture_default_str();
  gen->add_option("--width", synth.width)->capture_default_str();
  gen->add_option("--height", synth.height)->capture_default_str();
  gen->add_option("--seed", synth.seed)->capture_default_str();
  gen->add_option("--out", synth_out)->required();

  // validate-dataset
  std::string validate_dir;
  auto* val = app.add_subcommand("validate-dataset", "Check manifest and image files");
  val->add_option("dir", validate_dir)->required();

  // ged
  std::string img_a, img_b, debug_dir;
  CostParams costs;
  GraphExtractionParams extraction;
  auto* ged_cmd = app.add_subcommand("ged", "Graph edit distance between two signature images");
  ged_cmd->add_option("image1", img_a)->required();
  ged_cmd->add_option("image2", img_b)->required();
  ged_cmd->add_option("--c-node", costs.c_node)->capture_default_str();
  ged_cmd->add_option("--c-edge", costs.c_edge)->capture_default_str();
  ged_cmd->add_option("--sampling-d", extraction.sampling_d)->capture_default_str();
  ged_cmd->add_option("--debug-dir", debug_dir, "Write binarized and skeleton images here");

  // lsap
  std::string matrix_file;
  auto* lsap_cmd = app.add_subcommand("lsap", "Solve a square assignment problem (n, then n*n costs; x = forbidden)");
  lsap_cmd->add_option("matrix", matrix_file)->required();

  // graph
  std::string graph_img, graph_format = "text";
  auto* graph_cmd = app.add_subcommand("graph", "Print the keypoint graph of an image");
  graph_cmd->add_option("image", graph_img)->required();
  graph_cmd->add_option("--sampling-d", extraction.sampling_d)->capture_default_str();
  graph_cmd->add_option("--format", graph_format)->check(CLI::IsMember({"text", "gxl"}))->capture_default_str();

  // train
  std::string train_data, train_config, train_out;
  auto* train_cmd = app.add_subcommand("train", "Train the triplet embedding network on genuine signatures");
  train_cmd->add_option("--data", train_data)->required();
  train_cmd->add_option("--config", train_config, "key = value file");
  train_cmd->add_option("--out", train_out)->required();

  // embed
  std::string embed_model, embed_image;
  auto* embed_cmd = app.add_subcommand("embed", "Print the embedding of an image");
  embed_cmd->add_option("--model", embed_model)->required();
  embed_cmd->add_option("--image", embed_image)->required();

  // evaluate
  std::string eval_data, eval_refs = "r10", eval_forgeries = "sf", eval_system = "ged", eval_model, eval_cache,
                         eval_out;
  int eval_runs = 1;
  std::uint64_t eval_seed = 0;
  bool eval_user_norm = false, eval_random_refs = false;
  unsigned threads = 0;
  auto* eval_cmd = app.add_subcommand("evaluate", "Run a verification protocol and write EER, DET and scores");
  eval_cmd->add_option("--data", eval_data)->required();
  eval_cmd->add_option("--protocol", eval_refs)->check(CLI::IsMember({"r5", "r10"}))->capture_default_str();
  eval_cmd->add_option("--forgeries", eval_forgeries)->check(CLI::IsMember({"sf", "rf"}))->capture_default_str();
  eval_cmd->add_option("--system", eval_system)
      ->check(CLI::IsMember({"ged", "neural", "mcs"}))
      ->capture_default_str();
  eval_cmd->add_option("--runs", eval_runs)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--seed", eval_seed)->capture_default_str();
  eval_cmd->add_flag("--random-refs", eval_random_refs, "Draw references at random even for a single run");
  eval_cmd->add_option("--model", eval_model, "Trained embedding model (required for neural and mcs)");
  eval_cmd->add_flag("--user-norm", eval_user_norm, "Align per-user EER thresholds before pooling");
  eval_cmd->add_option("--cache", eval_cache, "Score cache file, read and updated");
  eval_cmd->add_option("--c-node", costs.c_node)->capture_default_str();
  eval_cmd->add_option("--c-edge", costs.c_edge)->capture_default_str();
  eval_cmd->add_option("--sampling-d", extraction.sampling_d)->capture_default_str();
  eval_cmd->add_option("--threads", threads, "0 = hardware concurrency");
  eval_cmd->add_option("--out", eval_out)->required();

  // grid-search
  std::string grid_data, grid_file, grid_out, grid_refs = "r5", grid_cache;
  auto* grid_cmd = app.add_subcommand("grid-search", "Tune graph edit costs on random forgeries");
  grid_cmd->add_option("--data", grid_data)->required();
  grid_cmd->add_option("--grid", grid_file, "c_node = ... / c_edge = ... (values or lo:hi:step)");
  grid_cmd->add_option("--protocol", grid_refs)->check(CLI::IsMember({"r5", "r10"}))->capture_default_str();
  grid_cmd->add_option("--sampling-d", extraction.sampling_d)->capture_default_str();
  grid_cmd->add_option("--cache", grid_cache, "Score cache file, read and updated");
  grid_cmd->add_option("--threads", threads, "0 = hardware concurrency");
  grid_cmd->add_option("--out", grid_out)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto ds = generate_synthetic(synth, synth_out);
      std::cout << "wrote " << ds.users.size() << " users, " << ds.genuine_count() << " genuine, "
                << ds.forgery_count() << " forgeries to " << synth_out << '\n';
    } else if (*val) {
      const auto problems = validate_dataset(validate_dir);
      for (const auto& p : problems) std::cerr << p << '\n';
      if (!problems.empty()) return 1;
      const auto ds = load_dataset(validate_dir);
      std::cout << "ok: " << ds.users.size() << " users, " << ds.genuine_count() << " genuine, "
                << ds.forgery_count() << " forgeries\n";
    } else if (*ged_cmd) {
      const auto a = read_png(img_a), b = read_png(img_b);
      if (!debug_dir.empty()) {
        ensure_dir(debug_dir);
        int k = 0;
        for (const auto* img : {&a, &b}) {
          const auto bin = binarize(*img);
          const auto tag = std::to_string(++k);
          write_png(fs::path(debug_dir) / ("binary" + tag + ".png"), bin.ink);
          write_png(fs::path(debug_dir) / ("skeleton" + tag + ".png"), skeletonize(bin.ink));
        }
      }
      const auto r = ged(graph_from_image(a, extraction), graph_from_image(b, extraction), costs);
      std::printf("lower_bound,max_ged,normalized\n%.17g,%.17g,%.17g\n", r.lower_bound, r.max_ged, r.normalized);
      if (r.degenerate) std::fprintf(stderr, "warning: one graph is empty\n");
    } else if (*lsap_cmd) {
      const auto a = solve(read_matrix(matrix_file));
      std::printf("%.17g\n", a.total_cost);
      for (std::size_t r = 0; r < a.permutation.size(); ++r) std::printf("%zu %d\n", r, a.permutation[r]);
    } else if (*graph_cmd) {
      const auto g = graph_from_image(read_png(graph_img), extraction);
      if (graph_format == "gxl") {
        write_graph_gxl(std::cout, g, fs::path(graph_img).stem().string());
      } else {
        write_graph_text(std::cout, g);
      }
    } else if (*train_cmd) {
      TrainConfig cfg = train_config.empty() ? TrainConfig{} : TrainConfig::from_key_values(read_key_values(train_config));
      const auto ds = load_dataset(train_data);
      std::vector<std::vector<GrayImage>> users;
      for (const auto& u : ds.users) {
        std::vector<GrayImage> imgs;
        for (const auto& p : u.genuine) imgs.push_back(read_png(p));
        users.push_back(std::move(imgs));
      }
      const auto r = train(users, cfg, [](const EpochLog& e) {
        std::fprintf(stderr, "epoch %3d train %.6f val %.6f\n", e.epoch, e.train_loss, e.val_loss);
      });
      save_model(train_out, r.model, cfg.seed, cfg.to_text());
      std::cout << "best epoch " << r.best_epoch << ", val loss " << r.history[r.best_epoch].val_loss << ", saved "
                << train_out << '\n';
    } else if (*embed_cmd) {
      const auto stored = load_model(embed_model);
      const auto e = embed(stored.model, read_png(embed_image));
      for (std::size_t i = 0; i < e.size(); ++i) std::printf(i ? ",%.17g" : "%.17g", e[i]);
      std::printf("\n");
    } else if (*eval_cmd) {
      const auto ds = load_dataset(eval_data);
      const auto protocol = make_protocol(eval_refs, eval_forgeries, eval_runs, eval_seed, eval_random_refs);
      const SystemKind system = eval_system == "ged" ? SystemKind::kGed
                                : eval_system == "neural" ? SystemKind::kNeural
                                                          : SystemKind::kMcs;
      std::optional<StoredModel> model;
      if (!eval_model.empty()) model = load_model(eval_model);
      if (system != SystemKind::kGed && !model)
        throw Error(ErrorCode::kInvalidArgument, "--model is required for the neural and mcs systems");
      auto cache = std::make_shared<ScoreCache>();
      if (!eval_cache.empty()) cache->load(eval_cache);
      EvalSettings settings{costs, extraction, eval_user_norm, threads};
      Evaluator ev(ds, settings, model ? &model->model : nullptr, cache);
      const auto r = ev.run_protocol(protocol, system);
      if (!eval_cache.empty()) cache->save(eval_cache);
      ensure_dir(eval_out);
      write_eer_json(fs::path(eval_out) / "eer.json", eer_json(r, protocol, system, settings));
      write_det_csv(fs::path(eval_out) / "det.csv", r.det);
      write_scores_csv(fs::path(eval_out) / "scores.csv", r.rows);
      std::printf("%s %s %s EER %.4f\n", eval_system.c_str(), eval_refs.c_str(), eval_forgeries.c_str(), r.eer);
    } else if (*grid_cmd) {
      std::vector<double> c_nodes = default_cost_grid(), c_edges = default_cost_grid();
      if (!grid_file.empty()) {
        for (const auto& [k, v] : read_key_values(grid_file)) {
          if (k == "c_node") c_nodes = parse_values(v);
          else if (k == "c_edge") c_edges = parse_values(v);
          else throw Error(ErrorCode::kInvalidArgument, "unknown grid key '" + k + "'");
        }
      }
      const auto ds = load_dataset(grid_data);
      auto cache = std::make_shared<ScoreCache>();
      if (!grid_cache.empty()) cache->load(grid_cache);
      EvalSettings settings;
      settings.extraction = extraction;
      settings.threads = threads;
      Evaluator ev(ds, settings, nullptr, cache);
      const auto g = grid_search_costs(ev, c_nodes, c_edges, make_protocol(grid_refs, "rf", 1, 0, false));
      if (!grid_cache.empty()) cache->save(grid_cache);
      ensure_dir(grid_out);
      write_grid_csv(fs::path(grid_out) / "grid.csv", g);
      std::printf("%zu combinations, best c_node %g c_edge %g EER %.4f\n", g.entries.size(), g.best.c_node,
                  g.best.c_edge, g.best.eer);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
