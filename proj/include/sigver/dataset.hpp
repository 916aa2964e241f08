#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/image.hpp"
#include "sigver/keypoint_graph.hpp"
#include "sigver/kv_config.hpp"
#include "sigver/png_io.hpp"

namespace sigver {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.txt";

struct UserRecord {
  std::string id;
  std::vector<fs::path> genuine;            // manifest order
  std::vector<fs::path> skilled_forgeries;  // manifest order

  bool operator==(const UserRecord&) const = default;
};

struct SignatureDataset {
  fs::path root;
  std::vector<UserRecord> users;

  bool operator==(const SignatureDataset&) const = default;

  std::size_t genuine_count() const {
    std::size_t n = 0;
    for (const auto& u : users) n += u.genuine.size();
    return n;
  }
  std::size_t forgery_count() const {
    std::size_t n = 0;
    for (const auto& u : users) n += u.skilled_forgeries.size();
    return n;
  }
};

/// `<root>/<user>/<kind>/NN.png` with 1-based, zero-padded NN.
inline fs::path sample_path(const fs::path& root, const std::string& user, bool forgery, std::size_t index,
                            std::size_t count) {
  const std::size_t digits = std::max<std::size_t>(2, std::to_string(count).size());
  std::string n = std::to_string(index + 1);
  n.insert(0, digits - n.size(), '0');
  return root / user / (forgery ? "forgery" : "genuine") / (n + ".png");
}

/// Manifest: `format = 1` followed by one `user = <id> <genuine> <forgeries>`
/// line per user, in dataset order.
inline void write_manifest(const SignatureDataset& ds) {
  std::ofstream os(ds.root / kManifestName);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write manifest in " + ds.root.string());
  os << "# signature dataset manifest\nformat = 1\n";
  for (const auto& u : ds.users) {
    os << "user = " << u.id << ' ' << u.genuine.size() << ' ' << u.skilled_forgeries.size() << '\n';
  }
}

/// Parses the manifest text; paths are derived from the directory layout.
inline SignatureDataset parse_manifest(std::istream& is, const fs::path& root) {
  SignatureDataset ds{root, {}};
  std::set<std::string> ids;
  std::string line;
  bool have_format = false;
  while (std::getline(is, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::kMalformedManifest, "expected key = value: " + line);
    const auto key = trim(line.substr(0, eq));
    std::istringstream value(line.substr(eq + 1));
    if (key == "format") {
      int f = 0;
      if (!(value >> f) || f != 1) throw Error(ErrorCode::kMalformedManifest, "unsupported format");
      have_format = true;
    } else if (key == "user") {
      std::string id;
      long long g = -1, f = -1;
      std::string extra;
      if (!(value >> id >> g >> f) || (value >> extra) || g < 1 || f < 0) {
        throw Error(ErrorCode::kMalformedManifest, "bad user line: " + line);
      }
      if (!ids.insert(id).second) throw Error(ErrorCode::kMalformedManifest, "duplicate user " + id);
      UserRecord u{id, {}, {}};
      for (long long i = 0; i < g; ++i) u.genuine.push_back(sample_path(root, id, false, i, g));
      for (long long i = 0; i < f; ++i) u.skilled_forgeries.push_back(sample_path(root, id, true, i, f));
      ds.users.push_back(std::move(u));
    } else {
      throw Error(ErrorCode::kMalformedManifest, "unknown key " + key);
    }
  }
  if (!have_format || ds.users.empty()) throw Error(ErrorCode::kMalformedManifest, "no users listed");
  return ds;
}

/// Loads `<root>/manifest.txt` and checks that every listed file exists.
inline SignatureDataset load_dataset(const fs::path& root) {
  std::ifstream is(root / kManifestName);
  if (!is) throw Error(ErrorCode::kMissingFile, (root / kManifestName).string());
  auto ds = parse_manifest(is, root);
  for (const auto& u : ds.users) {
    for (const auto* list : {&u.genuine, &u.skilled_forgeries})
      for (const auto& p : *list)
        if (!fs::exists(p)) throw Error(ErrorCode::kMissingFile, p.string());
  }
  return ds;
}

/// Full check: manifest, file presence, and that every image decodes.
/// Returns a list of problems; empty means the dataset is consistent.
inline std::vector<std::string> validate_dataset(const fs::path& root) {
  std::vector<std::string> problems;
  SignatureDataset ds;
  try {
    std::ifstream is(root / kManifestName);
    if (!is) throw Error(ErrorCode::kMissingFile, (root / kManifestName).string());
    ds = parse_manifest(is, root);
  } catch (const Error& e) {
    problems.emplace_back(e.what());
    return problems;
  }
  for (const auto& u : ds.users) {
    for (const auto* list : {&u.genuine, &u.skilled_forgeries}) {
      for (const auto& p : *list) {
        try {
          read_png(p);
        } catch (const Error& e) {
          problems.emplace_back(e.what());
        }
      }
    }
  }
  return problems;
}

// ---------------------------------------------------------------------------
// Synthetic signatures

struct SynthConfig {
  int users = 10;
  int genuine_per_user = 24;
  int skilled_per_user = 10;
  int strokes = 3;
  double jitter = 1.5;          // per control point, genuine samples (px)
  double forgery_noise = 4.0;   // per control point, skilled forgeries (px)
  int width = 192;
  int height = 96;
  std::uint64_t seed = 1;

  void validate() const {
    if (users < 1 || genuine_per_user < 1 || skilled_per_user < 0 || strokes < 1) {
      throw Error(ErrorCode::kInvalidArgument, "synthetic counts must be >= 1");
    }
    if (jitter < 0.0 || forgery_noise < 0.0) throw Error(ErrorCode::kInvalidArgument, "noise must be >= 0");
    if (width < 16 || height < 16) throw Error(ErrorCode::kInvalidArgument, "canvas too small");
  }
};

struct Stroke {
  std::vector<Point2> control;
  double width = 2.0;
};

struct SyntheticUser {
  std::vector<GrayImage> genuine;
  std::vector<GrayImage> forgeries;
};

namespace synth_detail {

inline std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t user, std::uint64_t kind, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(user), static_cast<std::uint32_t>(kind),
                    static_cast<std::uint32_t>(index)};
  return std::mt19937_64(seq);
}

inline Point2 catmull_rom(const Point2& p0, const Point2& p1, const Point2& p2, const Point2& p3, double t) {
  const double t2 = t * t, t3 = t2 * t;
  auto f = [&](double a, double b, double c, double d) {
    return 0.5 * (2 * b + (-a + c) * t + (2 * a - 5 * b + 4 * c - d) * t2 + (-a + 3 * b - 3 * c + d) * t3);
  };
  return {f(p0.x, p1.x, p2.x, p3.x), f(p0.y, p1.y, p2.y, p3.y)};
}

inline void stamp(GrayImage& img, double cx, double cy, double radius) {
  const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
  const int x1 = std::min(img.width - 1, static_cast<int>(std::ceil(cx + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
  const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(cy + radius)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= radius * radius) img.at(x, y) = 30;
}

inline GrayImage render(const std::vector<Stroke>& strokes, int width, int height) {
  GrayImage img(width, height, 245);
  for (const auto& s : strokes) {
    const auto& c = s.control;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      const auto& p0 = c[i == 0 ? 0 : i - 1];
      const auto& p3 = c[std::min(i + 2, c.size() - 1)];
      const double len = std::hypot(c[i + 1].x - c[i].x, c[i + 1].y - c[i].y);
      const int steps = std::max(2, static_cast<int>(len * 4));
      for (int k = 0; k <= steps; ++k) {
        const auto p = catmull_rom(p0, c[i], c[i + 1], p3, static_cast<double>(k) / steps);
        stamp(img, p.x, p.y, s.width / 2.0);
      }
    }
  }
  return img;
}

}  // namespace synth_detail

/// Base strokes of one user: smooth curves through 4-8 control points
/// drifting left to right, 2-3 px wide.
inline std::vector<Stroke> user_strokes(const SynthConfig& cfg, int user) {
  auto rng = synth_detail::make_rng(cfg.seed, user, 0, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> n_points(4, 8);
  const double mx = cfg.width * 0.1, my = cfg.height * 0.15;
  const double span_x = cfg.width - 2 * mx, span_y = cfg.height - 2 * my;
  std::vector<Stroke> strokes;
  for (int s = 0; s < cfg.strokes; ++s) {
    Stroke st;
    st.width = unit(rng) < 0.5 ? 2.0 : 3.0;
    const int n = n_points(rng);
    const double x_start = mx + span_x * (s / static_cast<double>(cfg.strokes)) * 0.8 + unit(rng) * span_x * 0.1;
    const double x_len = span_x * (0.3 + 0.5 * unit(rng));
    for (int k = 0; k < n; ++k) {
      const double x = std::min(mx + span_x, x_start + x_len * k / (n - 1) + (unit(rng) - 0.5) * span_x * 0.08);
      const double y = my + span_y * unit(rng);
      st.control.push_back({x, y});
    }
    strokes.push_back(std::move(st));
  }
  return strokes;
}

inline std::vector<Stroke> perturb(const std::vector<Stroke>& base, double sigma, double endpoint_sigma,
                                   std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  auto out = base;
  for (auto& s : out) {
    for (std::size_t k = 0; k < s.control.size(); ++k) {
      const bool end = k == 0 || k + 1 == s.control.size();
      const double sd = sigma + (end ? endpoint_sigma : 0.0);
      s.control[k].x += sd * noise(rng);
      s.control[k].y += sd * noise(rng);
    }
  }
  return out;
}

/// Renders every genuine sample and skilled forgery of one user in memory.
inline SyntheticUser synthesize_user(const SynthConfig& cfg, int user) {
  cfg.validate();
  const auto base = user_strokes(cfg, user);
  SyntheticUser out;
  for (int i = 0; i < cfg.genuine_per_user; ++i) {
    auto rng = synth_detail::make_rng(cfg.seed, user, 1, i);
    out.genuine.push_back(synth_detail::render(perturb(base, cfg.jitter, 0.0, rng), cfg.width, cfg.height));
  }
  for (int i = 0; i < cfg.skilled_per_user; ++i) {
    auto rng = synth_detail::make_rng(cfg.seed, user, 2, i);
    out.forgeries.push_back(
        synth_detail::render(perturb(base, cfg.forgery_noise, cfg.forgery_noise, rng), cfg.width, cfg.height));
  }
  return out;
}

inline std::string synthetic_user_id(int user) {
  std::string n = std::to_string(user + 1);
  if (n.size() < 3) n.insert(0, 3 - n.size(), '0');
  return "u" + n;
}

/// Writes a synthetic dataset with manifest under `root`.
inline SignatureDataset generate_synthetic(const SynthConfig& cfg, const fs::path& root) {
  cfg.validate();
  SignatureDataset ds{root, {}};
  for (int u = 0; u < cfg.users; ++u) {
    const auto id = synthetic_user_id(u);
    const auto images = synthesize_user(cfg, u);
    std::error_code ec;
    fs::create_directories(root / id / "genuine", ec);
    fs::create_directories(root / id / "forgery", ec);
    if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (root / id).string());
    UserRecord rec{id, {}, {}};
    for (std::size_t i = 0; i < images.genuine.size(); ++i) {
      rec.genuine.push_back(sample_path(root, id, false, i, images.genuine.size()));
      write_png(rec.genuine.back(), images.genuine[i]);
    }
    for (std::size_t i = 0; i < images.forgeries.size(); ++i) {
      rec.skilled_forgeries.push_back(sample_path(root, id, true, i, images.forgeries.size()));
      write_png(rec.skilled_forgeries.back(), images.forgeries[i]);
    }
    ds.users.push_back(std::move(rec));
  }
  write_manifest(ds);
  return ds;
}

}  // namespace sigver
