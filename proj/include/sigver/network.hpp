#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "sigver/error.hpp"
#include "sigver/image.hpp"

namespace sigver::nn {

enum class LayerKind { kConv, kRelu, kMaxPool, kLinear };

/// conv: `units` output channels, odd `kernel`, stride 1, same padding.
/// pool: non-overlapping `kernel` x `kernel` max pooling.
/// linear: `units` outputs.
struct LayerSpec {
  LayerKind kind;
  int units = 0;
  int kernel = 0;

  bool operator==(const LayerSpec&) const = default;
};

struct Shape {
  int channels = 1;
  int height = 1;
  int width = 1;
  std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
};

/// Layer list plus square input side length.
struct Architecture {
  int input_size = 32;
  std::vector<LayerSpec> layers;

  bool operator==(const Architecture&) const = default;

  /// Two conv+pool blocks, one hidden fully-connected layer, 32-d output.
  static Architecture default_arch() { return parse("conv:6:3,relu,pool:2,conv:12:3,relu,pool:2,fc:64,relu,fc:32", 32); }

  /// Comma-separated tokens `conv:<channels>:<kernel>`, `pool:<k>`, `fc:<units>`, `relu`.
  static Architecture parse(const std::string& text, int input_size) {
    Architecture a;
    a.input_size = input_size;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      tok.erase(std::remove_if(tok.begin(), tok.end(), ::isspace), tok.end());
      if (tok.empty()) continue;
      std::vector<std::string> parts;
      std::stringstream ts(tok);
      std::string part;
      while (std::getline(ts, part, ':')) parts.push_back(part);
      try {
        if (parts[0] == "relu" && parts.size() == 1) {
          a.layers.push_back({LayerKind::kRelu});
        } else if (parts[0] == "conv" && parts.size() == 3) {
          a.layers.push_back({LayerKind::kConv, std::stoi(parts[1]), std::stoi(parts[2])});
        } else if (parts[0] == "pool" && parts.size() == 2) {
          a.layers.push_back({LayerKind::kMaxPool, 0, std::stoi(parts[1])});
        } else if (parts[0] == "fc" && parts.size() == 2) {
          a.layers.push_back({LayerKind::kLinear, std::stoi(parts[1])});
        } else {
          throw Error(ErrorCode::kInvalidArgument, "unknown layer token '" + tok + "'");
        }
      } catch (const std::logic_error&) {
        throw Error(ErrorCode::kInvalidArgument, "bad layer token '" + tok + "'");
      }
    }
    return a;
  }

  std::string to_string() const {
    std::string s;
    for (const auto& l : layers) {
      if (!s.empty()) s += ',';
      switch (l.kind) {
        case LayerKind::kRelu: s += "relu"; break;
        case LayerKind::kConv: s += "conv:" + std::to_string(l.units) + ":" + std::to_string(l.kernel); break;
        case LayerKind::kMaxPool: s += "pool:" + std::to_string(l.kernel); break;
        case LayerKind::kLinear: s += "fc:" + std::to_string(l.units); break;
      }
    }
    return s;
  }
};

/// Per-sample forward state kept for the backward pass.
struct Activations {
  std::vector<std::vector<double>> values;  // values[0] is the input
  std::vector<std::vector<int>> argmax;     // per pooling layer, else empty
};

/// Embedding network f: image -> R^embedding_dim with a flat parameter
/// vector. Inference does not mutate the model.
class EmbeddingModel {
 public:
  EmbeddingModel() = default;

  explicit EmbeddingModel(Architecture arch) : arch_(std::move(arch)) {
    if (arch_.input_size <= 0) throw Error(ErrorCode::kInvalidArgument, "input size must be positive");
    if (arch_.layers.empty()) throw Error(ErrorCode::kInvalidArgument, "empty architecture");
    Shape s{1, arch_.input_size, arch_.input_size};
    shapes_.push_back(s);
    std::size_t offset = 0;
    for (const auto& l : arch_.layers) {
      offsets_.push_back(offset);
      switch (l.kind) {
        case LayerKind::kConv:
          if (l.units <= 0 || l.kernel <= 0 || l.kernel % 2 == 0) {
            throw Error(ErrorCode::kInvalidArgument, "conv needs positive channels and odd kernel");
          }
          offset += static_cast<std::size_t>(l.units) * s.channels * l.kernel * l.kernel + l.units;
          s.channels = l.units;
          break;
        case LayerKind::kMaxPool:
          if (l.kernel <= 0 || s.height / l.kernel == 0 || s.width / l.kernel == 0) {
            throw Error(ErrorCode::kInvalidArgument, "pooling kernel too large");
          }
          s.height /= l.kernel;
          s.width /= l.kernel;
          break;
        case LayerKind::kLinear:
          if (l.units <= 0) throw Error(ErrorCode::kInvalidArgument, "fc needs positive units");
          offset += static_cast<std::size_t>(l.units) * s.size() + l.units;
          s = Shape{l.units, 1, 1};
          break;
        case LayerKind::kRelu:
          break;
      }
      shapes_.push_back(s);
    }
    params_.assign(offset, 0.0);
  }

  const Architecture& architecture() const { return arch_; }
  int input_size() const { return arch_.input_size; }
  int embedding_dim() const { return static_cast<int>(shapes_.back().size()); }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  /// Weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
  void initialize(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::fill(params_.begin(), params_.end(), 0.0);
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
      const auto& l = arch_.layers[i];
      const Shape in = shapes_[i];
      std::size_t fan_in = 0, weights = 0;
      if (l.kind == LayerKind::kConv) {
        fan_in = static_cast<std::size_t>(in.channels) * l.kernel * l.kernel;
        weights = fan_in * l.units;
      } else if (l.kind == LayerKind::kLinear) {
        fan_in = in.size();
        weights = fan_in * l.units;
      } else {
        continue;
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (std::size_t k = 0; k < weights; ++k) params_[offsets_[i] + k] = dist(rng);
    }
  }

  void forward(std::span<const double> input, Activations& act) const {
    if (input.size() != shapes_.front().size()) throw Error(ErrorCode::kInvalidArgument, "input size mismatch");
    act.values.resize(arch_.layers.size() + 1);
    act.argmax.resize(arch_.layers.size());
    act.values[0].assign(input.begin(), input.end());
    for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
      const auto& in = act.values[i];
      auto& out = act.values[i + 1];
      out.assign(shapes_[i + 1].size(), 0.0);
      const double* p = params_.data() + offsets_[i];
      switch (arch_.layers[i].kind) {
        case LayerKind::kConv: conv_forward(i, in, out, p); break;
        case LayerKind::kRelu:
          for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
          break;
        case LayerKind::kMaxPool: pool_forward(i, in, out, act.argmax[i]); break;
        case LayerKind::kLinear: linear_forward(i, in, out, p); break;
      }
    }
  }

  /// Accumulates d(loss)/d(params) into `grad` given d(loss)/d(output).
  void backward(const Activations& act, std::span<const double> grad_out, std::span<double> grad) const {
    std::vector<double> g(grad_out.begin(), grad_out.end()), g_in;
    for (std::size_t i = arch_.layers.size(); i-- > 0;) {
      const auto& in = act.values[i];
      g_in.assign(in.size(), 0.0);
      const double* p = params_.data() + offsets_[i];
      double* gp = grad.data() + offsets_[i];
      switch (arch_.layers[i].kind) {
        case LayerKind::kConv: conv_backward(i, in, g, g_in, p, gp); break;
        case LayerKind::kRelu:
          for (std::size_t k = 0; k < in.size(); ++k) g_in[k] = in[k] > 0.0 ? g[k] : 0.0;
          break;
        case LayerKind::kMaxPool:
          for (std::size_t k = 0; k < g.size(); ++k) g_in[act.argmax[i][k]] += g[k];
          break;
        case LayerKind::kLinear: linear_backward(i, in, g, g_in, p, gp); break;
      }
      std::swap(g, g_in);
    }
  }

  std::vector<double> forward(std::span<const double> input) const {
    Activations act;
    forward(input, act);
    return std::move(act.values.back());
  }

 private:
  void conv_forward(std::size_t i, const std::vector<double>& in, std::vector<double>& out, const double* p) const {
    const Shape si = shapes_[i], so = shapes_[i + 1];
    const int k = arch_.layers[i].kernel, pad = k / 2;
    const double* bias = p + static_cast<std::size_t>(so.channels) * si.channels * k * k;
    for (int oc = 0; oc < so.channels; ++oc) {
      double* o = out.data() + static_cast<std::size_t>(oc) * so.height * so.width;
      std::fill(o, o + so.height * so.width, bias[oc]);
      for (int ic = 0; ic < si.channels; ++ic) {
        const double* x = in.data() + static_cast<std::size_t>(ic) * si.height * si.width;
        const double* wk = p + (static_cast<std::size_t>(oc) * si.channels + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const double wv = wk[ky * k + kx];
            const int dy = ky - pad, dx = kx - pad;
            const int y0 = std::max(0, -dy), y1 = std::min(so.height, si.height - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(so.width, si.width - dx);
            for (int y = y0; y < y1; ++y) {
              const double* xr = x + (y + dy) * si.width + dx;
              double* orow = o + y * so.width;
              for (int xx = x0; xx < x1; ++xx) orow[xx] += wv * xr[xx];
            }
          }
        }
      }
    }
  }

  void conv_backward(std::size_t i, const std::vector<double>& in, const std::vector<double>& g,
                     std::vector<double>& g_in, const double* p, double* gp) const {
    const Shape si = shapes_[i], so = shapes_[i + 1];
    const int k = arch_.layers[i].kernel, pad = k / 2;
    double* gbias = gp + static_cast<std::size_t>(so.channels) * si.channels * k * k;
    for (int oc = 0; oc < so.channels; ++oc) {
      const double* go = g.data() + static_cast<std::size_t>(oc) * so.height * so.width;
      for (int t = 0; t < so.height * so.width; ++t) gbias[oc] += go[t];
      for (int ic = 0; ic < si.channels; ++ic) {
        const double* x = in.data() + static_cast<std::size_t>(ic) * si.height * si.width;
        double* gx = g_in.data() + static_cast<std::size_t>(ic) * si.height * si.width;
        const std::size_t wofs = (static_cast<std::size_t>(oc) * si.channels + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const double wv = p[wofs + ky * k + kx];
            const int dy = ky - pad, dx = kx - pad;
            const int y0 = std::max(0, -dy), y1 = std::min(so.height, si.height - dy);
            const int x0 = std::max(0, -dx), x1 = std::min(so.width, si.width - dx);
            double gw = 0.0;
            for (int y = y0; y < y1; ++y) {
              const double* xr = x + (y + dy) * si.width + dx;
              double* gxr = gx + (y + dy) * si.width + dx;
              const double* gr = go + y * so.width;
              for (int xx = x0; xx < x1; ++xx) {
                gw += gr[xx] * xr[xx];
                gxr[xx] += gr[xx] * wv;
              }
            }
            gp[wofs + ky * k + kx] += gw;
          }
        }
      }
    }
  }

  void pool_forward(std::size_t i, const std::vector<double>& in, std::vector<double>& out,
                    std::vector<int>& argmax) const {
    const Shape si = shapes_[i], so = shapes_[i + 1];
    const int k = arch_.layers[i].kernel;
    argmax.assign(out.size(), 0);
    for (int c = 0; c < so.channels; ++c) {
      for (int y = 0; y < so.height; ++y) {
        for (int x = 0; x < so.width; ++x) {
          int best = (c * si.height + y * k) * si.width + x * k;
          for (int py = 0; py < k; ++py)
            for (int px = 0; px < k; ++px) {
              const int idx = (c * si.height + y * k + py) * si.width + x * k + px;
              if (in[idx] > in[best]) best = idx;
            }
          const int o = (c * so.height + y) * so.width + x;
          out[o] = in[best];
          argmax[o] = best;
        }
      }
    }
  }

  void linear_forward(std::size_t i, const std::vector<double>& in, std::vector<double>& out, const double* p) const {
    const std::size_t n_in = in.size(), n_out = out.size();
    const double* bias = p + n_in * n_out;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* w = p + o * n_in;
      double s = bias[o];
      for (std::size_t j = 0; j < n_in; ++j) s += w[j] * in[j];
      out[o] = s;
    }
    (void)i;
  }

  void linear_backward(std::size_t i, const std::vector<double>& in, const std::vector<double>& g,
                       std::vector<double>& g_in, const double* p, double* gp) const {
    const std::size_t n_in = in.size(), n_out = g.size();
    double* gbias = gp + n_in * n_out;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double go = g[o];
      gbias[o] += go;
      if (go == 0.0) continue;
      const double* w = p + o * n_in;
      double* gw = gp + o * n_in;
      for (std::size_t j = 0; j < n_in; ++j) {
        gw[j] += go * in[j];
        g_in[j] += go * w[j];
      }
    }
    (void)i;
  }

  Architecture arch_;
  std::vector<Shape> shapes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Aspect-preserving area resampling into a `size` x `size` canvas,
/// centered and zero-padded, with inverted intensities in [0, 1] so that
/// ink is high.
inline std::vector<double> to_network_input(const GrayImage& image, int size) {
  const double scale = std::max(image.width, image.height) / static_cast<double>(size);
  const int tw = std::clamp(static_cast<int>(std::lround(image.width / scale)), 1, size);
  const int th = std::clamp(static_cast<int>(std::lround(image.height / scale)), 1, size);
  const int ox = (size - tw) / 2, oy = (size - th) / 2;

  // Source coverage of each target cell along one axis.
  auto weights = [scale](int target, int source) {
    std::vector<std::vector<std::pair<int, double>>> w(target);
    for (int t = 0; t < target; ++t) {
      const double a = t * scale, b = std::min((t + 1) * scale, static_cast<double>(source));
      double total = 0.0;
      for (int s = static_cast<int>(std::floor(a)); s < b && s < source; ++s) {
        const double cover = std::min<double>(b, s + 1) - std::max<double>(a, s);
        if (cover > 0.0) {
          w[t].emplace_back(s, cover);
          total += cover;
        }
      }
      for (auto& [s, c] : w[t]) c /= total;
    }
    return w;
  };
  const auto wx = weights(tw, image.width), wy = weights(th, image.height);

  std::vector<double> out(static_cast<std::size_t>(size) * size, 0.0);
  for (int ty = 0; ty < th; ++ty) {
    for (int tx = 0; tx < tw; ++tx) {
      double v = 0.0;
      for (const auto& [sy, cy] : wy[ty])
        for (const auto& [sx, cx] : wx[tx]) v += cy * cx * (255 - image.at(sx, sy));
      out[static_cast<std::size_t>(ty + oy) * size + tx + ox] = v / 255.0;
    }
  }
  return out;
}

}  // namespace sigver::nn
