#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/image.hpp"
#include "sigver/kv_config.hpp"
#include "sigver/network.hpp"

namespace sigver {

using nn::EmbeddingModel;

inline double triplet_loss(double delta_plus, double delta_minus, double margin) {
  return std::max(delta_plus - delta_minus + margin, 0.0);
}

inline double embedding_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline std::vector<double> embed(const EmbeddingModel& model, const GrayImage& image) {
  return model.forward(nn::to_network_input(image, model.input_size()));
}

inline double dissimilarity_neural(const EmbeddingModel& model, const GrayImage& r, const GrayImage& t) {
  return embedding_distance(embed(model, r), embed(model, t));
}

/// Indices into a flat list of preprocessed images.
struct Triplet {
  int anchor = 0;
  int positive = 0;
  int negative = 0;
};

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  double margin = 1.0;
  int epochs = 50;
  int batch_size = 32;
  std::uint64_t seed = 1;
  int train_per_user = 16;
  int val_per_user = 8;
  int triplets_per_image = 4;
  int input_size = 32;
  std::string architecture = nn::Architecture::default_arch().to_string();

  void validate() const {
    if (!(learning_rate > 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning_rate must be > 0");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw Error(ErrorCode::kInvalidArgument, "momentum must be in [0, 1)");
    if (!(margin > 0.0)) throw Error(ErrorCode::kInvalidArgument, "margin must be > 0");
    if (epochs < 0 || batch_size <= 0 || train_per_user < 2 || val_per_user < 0 || triplets_per_image <= 0) {
      throw Error(ErrorCode::kInvalidArgument, "bad epoch/batch/split settings");
    }
  }

  std::string to_text() const {
    std::ostringstream os;
    os.precision(17);
    os << "learning_rate = " << learning_rate << "\nmomentum = " << momentum << "\nmargin = " << margin
       << "\nepochs = " << epochs << "\nbatch_size = " << batch_size << "\nseed = " << seed
       << "\ntrain_per_user = " << train_per_user << "\nval_per_user = " << val_per_user
       << "\ntriplets_per_image = " << triplets_per_image << "\ninput_size = " << input_size
       << "\narchitecture = " << architecture << "\n";
    return os.str();
  }

  static TrainConfig from_key_values(const std::map<std::string, std::string>& kv) {
    TrainConfig c;
    for (const auto& [k, v] : kv) {
      try {
        if (k == "learning_rate") c.learning_rate = std::stod(v);
        else if (k == "momentum") c.momentum = std::stod(v);
        else if (k == "margin") c.margin = std::stod(v);
        else if (k == "epochs") c.epochs = std::stoi(v);
        else if (k == "batch_size") c.batch_size = std::stoi(v);
        else if (k == "seed") c.seed = std::stoull(v);
        else if (k == "train_per_user") c.train_per_user = std::stoi(v);
        else if (k == "val_per_user") c.val_per_user = std::stoi(v);
        else if (k == "triplets_per_image") c.triplets_per_image = std::stoi(v);
        else if (k == "input_size") c.input_size = std::stoi(v);
        else if (k == "architecture") c.architecture = v;
        else throw Error(ErrorCode::kInvalidArgument, "unknown config key '" + k + "'");
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::kInvalidArgument, "bad value for '" + k + "': " + v);
      }
    }
    c.validate();
    return c;
  }
};

struct BatchResult {
  double loss = 0.0;              // mean triplet loss over the batch
  std::vector<double> gradient;   // d(loss)/d(params); empty unless requested
};

/// Mean triplet loss of a batch and, optionally, its parameter gradient.
/// Each distinct image is forwarded once; gradients w.r.t. embeddings are
/// accumulated per image before backpropagation.
inline BatchResult batch_loss(const EmbeddingModel& model, std::span<const std::vector<double>> inputs,
                              std::span<const Triplet> triplets, double margin, bool with_gradient) {
  BatchResult out;
  if (triplets.empty()) return out;
  std::vector<int> used;
  for (const auto& t : triplets) used.insert(used.end(), {t.anchor, t.positive, t.negative});
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());
  std::map<int, std::size_t> slot;
  for (std::size_t i = 0; i < used.size(); ++i) slot[used[i]] = i;

  std::vector<nn::Activations> acts(used.size());
  for (std::size_t i = 0; i < used.size(); ++i) model.forward(inputs[used[i]], acts[i]);
  auto emb = [&](int image) -> const std::vector<double>& { return acts[slot[image]].values.back(); };

  const std::size_t dim = static_cast<std::size_t>(model.embedding_dim());
  std::vector<std::vector<double>> grad_emb(used.size(), std::vector<double>(dim, 0.0));
  const double scale = 1.0 / static_cast<double>(triplets.size());
  for (const auto& t : triplets) {
    const auto& a = emb(t.anchor);
    const auto& p = emb(t.positive);
    const auto& n = emb(t.negative);
    const double dp = embedding_distance(a, p), dn = embedding_distance(a, n);
    const double l = triplet_loss(dp, dn, margin);
    out.loss += l * scale;
    if (!with_gradient || l <= 0.0) continue;
    auto& ga = grad_emb[slot[t.anchor]];
    auto& gpos = grad_emb[slot[t.positive]];
    auto& gneg = grad_emb[slot[t.negative]];
    for (std::size_t k = 0; k < dim; ++k) {
      // d dp / d a = (a - p) / dp; zero distances take the zero subgradient.
      const double up = dp > 0.0 ? (a[k] - p[k]) / dp : 0.0;
      const double un = dn > 0.0 ? (a[k] - n[k]) / dn : 0.0;
      ga[k] += scale * (up - un);
      gpos[k] -= scale * up;
      gneg[k] += scale * un;
    }
  }
  if (with_gradient) {
    out.gradient.assign(model.parameter_count(), 0.0);
    for (std::size_t i = 0; i < used.size(); ++i) {
      if (std::all_of(grad_emb[i].begin(), grad_emb[i].end(), [](double g) { return g == 0.0; })) continue;
      model.backward(acts[i], grad_emb[i], out.gradient);
    }
  }
  return out;
}

/// Uniformly random valid triplets over images grouped by user.
inline std::vector<Triplet> sample_triplets(const std::vector<std::vector<int>>& by_user, std::size_t count,
                                            std::mt19937_64& rng) {
  std::vector<int> eligible;
  std::size_t pool = 0;
  for (std::size_t u = 0; u < by_user.size(); ++u) {
    if (by_user[u].size() >= 2) eligible.push_back(static_cast<int>(u));
    pool += by_user[u].size();
  }
  std::vector<Triplet> out;
  if (eligible.empty() || by_user.size() < 2) return out;
  std::vector<int> weights;  // anchors drawn uniformly over images of eligible users
  for (int u : eligible) weights.push_back(static_cast<int>(by_user[u].size()));
  std::discrete_distribution<int> pick_user(weights.begin(), weights.end());
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int u = eligible[pick_user(rng)];
    const auto& imgs = by_user[u];
    std::uniform_int_distribution<std::size_t> in_user(0, imgs.size() - 1);
    const std::size_t a = in_user(rng);
    std::size_t p = in_user(rng);
    while (p == a) p = in_user(rng);
    std::uniform_int_distribution<std::size_t> other(0, pool - imgs.size() - 1);
    std::size_t k = other(rng);
    int negative = -1;
    for (std::size_t v = 0; v < by_user.size() && negative < 0; ++v) {
      if (static_cast<int>(v) == u) continue;
      if (k < by_user[v].size()) negative = by_user[v][k];
      else k -= by_user[v].size();
    }
    out.push_back({imgs[a], imgs[p], negative});
  }
  return out;
}

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // NaN for epoch 0 (before any update)
  double val_loss = 0.0;
};

struct TrainResult {
  EmbeddingModel model;  // parameters of the best validation epoch
  std::vector<EpochLog> history;
  int best_epoch = 0;
};

using TrainLogger = std::function<void(const EpochLog&)>;

/// Triplet training with SGD + momentum (v = m v + g; w -= lr v) on genuine
/// images grouped per user. The first `train_per_user` images of each user
/// train, the next `val_per_user` validate. Deterministic given the seed.
inline TrainResult train(const std::vector<std::vector<GrayImage>>& users, const TrainConfig& config,
                         const TrainLogger& log = {}) {
  config.validate();
  if (users.size() < 2) throw Error(ErrorCode::kInsufficientData, "need at least 2 users");

  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<int>> train_ids(users.size()), val_ids(users.size());
  for (std::size_t u = 0; u < users.size(); ++u) {
    const int n = static_cast<int>(users[u].size());
    const int n_train = std::min(n, config.train_per_user);
    if (n_train < 2) throw Error(ErrorCode::kInsufficientData, "user " + std::to_string(u) + " has < 2 train images");
    const int n_val = std::min(n - n_train, config.val_per_user);
    for (int i = 0; i < n_train + n_val; ++i) {
      (i < n_train ? train_ids[u] : val_ids[u]).push_back(static_cast<int>(inputs.size()));
      inputs.push_back(nn::to_network_input(users[u][i], config.input_size));
    }
  }
  std::size_t n_train = 0, n_val = 0;
  for (const auto& v : train_ids) n_train += v.size();
  for (const auto& v : val_ids) n_val += v.size();

  EmbeddingModel model(nn::Architecture::parse(config.architecture, config.input_size));
  model.initialize(config.seed);

  std::mt19937_64 val_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  auto val_triplets = sample_triplets(val_ids, config.triplets_per_image * n_val, val_rng);
  if (val_triplets.empty()) {
    // Not enough held-out images: validate on a fixed draw from the train split.
    val_triplets = sample_triplets(train_ids, config.triplets_per_image * n_train, val_rng);
  }

  TrainResult result{model, {}, 0};
  double best = batch_loss(model, inputs, val_triplets, config.margin, false).loss;
  result.history.push_back({0, std::numeric_limits<double>::quiet_NaN(), best});
  if (log) log(result.history.back());

  std::mt19937_64 rng(config.seed);
  std::vector<double> velocity(model.parameter_count(), 0.0);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto triplets = sample_triplets(train_ids, config.triplets_per_image * n_train, rng);
    double train_loss = 0.0;
    for (std::size_t b = 0; b < triplets.size(); b += config.batch_size) {
      const std::size_t e = std::min(triplets.size(), b + config.batch_size);
      const std::span<const Triplet> batch(triplets.data() + b, e - b);
      const auto r = batch_loss(model, inputs, batch, config.margin, true);
      train_loss += r.loss * static_cast<double>(batch.size());
      auto params = model.parameters();
      for (std::size_t k = 0; k < params.size(); ++k) {
        velocity[k] = config.momentum * velocity[k] + r.gradient[k];
        params[k] -= config.learning_rate * velocity[k];
      }
    }
    train_loss /= static_cast<double>(std::max<std::size_t>(1, triplets.size()));
    const double val = batch_loss(model, inputs, val_triplets, config.margin, false).loss;
    result.history.push_back({epoch, train_loss, val});
    if (log) log(result.history.back());
    if (val < best) {
      best = val;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

// Binary container: magic, version, architecture, input size, seed,
// training config text, parameter count, raw little-endian doubles.
inline constexpr char kModelMagic[8] = {'S', 'G', 'V', 'E', 'M', 'B', 'D', '\0'};
inline constexpr std::uint32_t kModelVersion = 1;

namespace detail {
template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T take(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw Error(ErrorCode::kIoError, "truncated model file");
  return v;
}
inline void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline std::string take_string(std::istream& is) {
  const auto n = take<std::uint32_t>(is);
  if (n > (1u << 24)) throw Error(ErrorCode::kIoError, "corrupt model file");
  std::string s(n, '\0');
  if (!is.read(s.data(), n)) throw Error(ErrorCode::kIoError, "truncated model file");
  return s;
}
}  // namespace detail

struct StoredModel {
  EmbeddingModel model;
  std::uint64_t seed = 0;
  std::string config_text;
};

inline void save_model(const std::filesystem::path& path, const EmbeddingModel& model, std::uint64_t seed = 0,
                       const std::string& config_text = {}) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  os.write(kModelMagic, sizeof kModelMagic);
  detail::put(os, kModelVersion);
  detail::put_string(os, model.architecture().to_string());
  detail::put<std::int32_t>(os, model.input_size());
  detail::put<std::uint64_t>(os, seed);
  detail::put_string(os, config_text);
  detail::put<std::uint64_t>(os, model.parameter_count());
  for (double p : model.parameters()) detail::put(os, p);
  if (!os) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
}

inline StoredModel load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kMissingFile, path.string());
  char magic[sizeof kModelMagic];
  if (!is.read(magic, sizeof magic) || std::memcmp(magic, kModelMagic, sizeof magic) != 0) {
    throw Error(ErrorCode::kIoError, path.string() + ": not a model file");
  }
  if (detail::take<std::uint32_t>(is) != kModelVersion) {
    throw Error(ErrorCode::kIoError, path.string() + ": unsupported model version");
  }
  const auto arch = detail::take_string(is);
  const auto input = detail::take<std::int32_t>(is);
  StoredModel out{EmbeddingModel(nn::Architecture::parse(arch, input)), 0, {}};
  out.seed = detail::take<std::uint64_t>(is);
  out.config_text = detail::take_string(is);
  if (detail::take<std::uint64_t>(is) != out.model.parameter_count()) {
    throw Error(ErrorCode::kIoError, path.string() + ": parameter count mismatch");
  }
  for (double& p : out.model.parameters()) p = detail::take<double>(is);
  return out;
}

}  // namespace sigver
