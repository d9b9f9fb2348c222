#include "dashgs/splat2d.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dashgs/error.hpp"
#include "dashgs/parallel.hpp"

namespace dashgs::splat {

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

std::array<double, 3> Gaussian2D::color() const {
  return {logistic(color_raw[0]), logistic(color_raw[1]), logistic(color_raw[2])};
}

double Gaussian2D::max_scale() const { return std::exp(std::max(log_scale[0], log_scale[1])); }

ParamGroup group_of(int index) {
  switch (index) {
    case 0:
    case 1:
      return ParamGroup::kPosition;
    case 2:
    case 3:
      return ParamGroup::kScale;
    case 4:
      return ParamGroup::kRotation;
    case 5:
      return ParamGroup::kOpacity;
    case 6:
    case 7:
    case 8:
      return ParamGroup::kColor;
    default:
      throw InputError("parameter index out of range");
  }
}

double& param(Gaussian2D& g, int index) {
  switch (index) {
    case 0: return g.pos[0];
    case 1: return g.pos[1];
    case 2: return g.log_scale[0];
    case 3: return g.log_scale[1];
    case 4: return g.rotation;
    case 5: return g.opacity_raw;
    case 6: return g.color_raw[0];
    case 7: return g.color_raw[1];
    case 8: return g.color_raw[2];
    default: throw InputError("parameter index out of range");
  }
}

double param(const Gaussian2D& g, int index) { return param(const_cast<Gaussian2D&>(g), index); }

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

namespace {

// Everything the per-pixel loops need, in normalized coordinates.
struct Prepared {
  double mx, my;
  double cs, sn;
  double inv_var0, inv_var1;
  double qa, qb, qc;  // q = qa dx^2 + 2 qb dx dy + qc dy^2
  double opacity;
  std::array<double, 3> color;
  int x0, x1, y0, y1;  // inclusive pixel box; empty when x0 > x1
};

Prepared prepare(const Gaussian2D& g, int width, int height, const RenderOptions& options) {
  Prepared p{};
  p.mx = g.pos[0];
  p.my = g.pos[1];
  p.cs = std::cos(g.rotation);
  p.sn = std::sin(g.rotation);
  double var0 = std::exp(2.0 * g.log_scale[0]);
  double var1 = std::exp(2.0 * g.log_scale[1]);
  p.inv_var0 = 1.0 / var0;
  p.inv_var1 = 1.0 / var1;
  p.qa = p.cs * p.cs * p.inv_var0 + p.sn * p.sn * p.inv_var1;
  p.qb = p.cs * p.sn * (p.inv_var0 - p.inv_var1);
  p.qc = p.sn * p.sn * p.inv_var0 + p.cs * p.cs * p.inv_var1;
  p.opacity = g.opacity();
  p.color = g.color();

  if (!options.culling || std::isinf(options.support_sigma)) {
    p.x0 = 0;
    p.x1 = width - 1;
    p.y0 = 0;
    p.y1 = height - 1;
    return p;
  }
  // Slightly padded so rounding never drops a sample that passes the support test.
  double k = options.support_sigma * (1.0 + 1e-9);
  double hx = k * std::sqrt(p.cs * p.cs * var0 + p.sn * p.sn * var1);
  double hy = k * std::sqrt(p.sn * p.sn * var0 + p.cs * p.cs * var1);
  // Pixel x has center (x + 0.5) / W.
  double fx0 = std::ceil((p.mx - hx) * width - 0.5);
  double fx1 = std::floor((p.mx + hx) * width - 0.5);
  double fy0 = std::ceil((p.my - hy) * height - 0.5);
  double fy1 = std::floor((p.my + hy) * height - 0.5);
  if (!std::isfinite(fx0) || !std::isfinite(fx1) || !std::isfinite(fy0) || !std::isfinite(fy1)) {
    throw NumericError("non-finite primitive extent");
  }
  p.x0 = static_cast<int>(std::clamp(fx0, 0.0, static_cast<double>(width)));
  p.x1 = static_cast<int>(std::clamp(fx1, -1.0, static_cast<double>(width - 1)));
  p.y0 = static_cast<int>(std::clamp(fy0, 0.0, static_cast<double>(height)));
  p.y1 = static_cast<int>(std::clamp(fy1, -1.0, static_cast<double>(height - 1)));
  return p;
}

struct TileGrid {
  int size = 16;
  int cols = 0;
  int rows = 0;
  // Primitive indices per tile, ascending.
  std::vector<std::vector<std::uint32_t>> lists;
};

TileGrid bin(const std::vector<Prepared>& prepared, int width, int height, int tile_size) {
  TileGrid grid;
  grid.size = tile_size;
  grid.cols = (width + tile_size - 1) / tile_size;
  grid.rows = (height + tile_size - 1) / tile_size;
  grid.lists.resize(static_cast<std::size_t>(grid.cols) * static_cast<std::size_t>(grid.rows));
  for (std::size_t i = 0; i < prepared.size(); ++i) {
    const Prepared& p = prepared[i];
    if (p.x0 > p.x1 || p.y0 > p.y1) continue;
    for (int ty = p.y0 / tile_size; ty <= p.y1 / tile_size; ++ty) {
      for (int tx = p.x0 / tile_size; tx <= p.x1 / tile_size; ++tx) {
        grid.lists[static_cast<std::size_t>(ty) * grid.cols + tx].push_back(static_cast<std::uint32_t>(i));
      }
    }
  }
  return grid;
}

struct Setup {
  std::vector<Prepared> prepared;
  TileGrid grid;
  double cutoff;  // squared Mahalanobis support radius
};

Setup setup(const SplatModel& model, int width, int height, const RenderOptions& options) {
  if (width < 1 || height < 1) throw InputError("render size must be at least 1x1");
  if (options.tile_size < 1) throw InputError("tile size must be positive");
  if (!(options.support_sigma > 0.0)) throw InputError("support_sigma must be positive");
  Setup s;
  s.prepared.reserve(model.size());
  for (const Gaussian2D& g : model.primitives) s.prepared.push_back(prepare(g, width, height, options));
  s.grid = bin(s.prepared, width, height, options.tile_size);
  s.cutoff = options.support_sigma * options.support_sigma;
  return s;
}

// One composited sample, kept for the backward pass.
struct Sample {
  std::uint32_t local;  // position in the tile list
  bool clamped;
  double gauss;
  double weight;
  double trans;  // transmittance before this sample
  double dx, dy;
};

template <bool kRecord>
std::array<double, 3> shade(const Setup& s, const std::vector<std::uint32_t>& list, double u, double v,
                            std::vector<Sample>* samples) {
  std::array<double, 3> c{0.0, 0.0, 0.0};
  double trans = 1.0;
  for (std::size_t j = 0; j < list.size(); ++j) {
    const Prepared& p = s.prepared[list[j]];
    double dx = u - p.mx;
    double dy = v - p.my;
    double q = p.qa * dx * dx + 2.0 * p.qb * dx * dy + p.qc * dy * dy;
    if (!(q <= s.cutoff)) continue;
    double gauss = std::exp(-0.5 * q);
    double w = p.opacity * gauss;
    bool clamped = false;
    if (w > kMaxWeight) {
      w = kMaxWeight;
      clamped = true;
    }
    if constexpr (kRecord) {
      samples->push_back({static_cast<std::uint32_t>(j), clamped, gauss, w, trans, dx, dy});
    }
    double tw = trans * w;
    c[0] += tw * p.color[0];
    c[1] += tw * p.color[1];
    c[2] += tw * p.color[2];
    trans *= 1.0 - w;
  }
  return c;
}

std::size_t workers_for(const RenderOptions& options) {
  return static_cast<std::size_t>(options.workers > 0 ? options.workers : worker_count());
}

}  // namespace

Image render(const SplatModel& model, int width, int height, const RenderOptions& options) {
  Setup s = setup(model, width, height, options);
  Image out(height, width, 3);
  const int ts = s.grid.size;
  parallel_for(
      s.grid.lists.size(),
      [&](std::size_t t) {
        const auto& list = s.grid.lists[t];
        int ty = static_cast<int>(t) / s.grid.cols;
        int tx = static_cast<int>(t) % s.grid.cols;
        for (int y = ty * ts; y < std::min(height, (ty + 1) * ts); ++y) {
          double v = (y + 0.5) / height;
          for (int x = tx * ts; x < std::min(width, (tx + 1) * ts); ++x) {
            double u = (x + 0.5) / width;
            auto c = shade<false>(s, list, u, v, nullptr);
            for (int ch = 0; ch < 3; ++ch) out.at(y, x, ch) = c[ch];
          }
        }
      },
      static_cast<int>(workers_for(options)));
  return out;
}

LossGrad render_loss_grad(const SplatModel& model, const Image& target, int width, int height,
                          const RenderOptions& options) {
  if (target.height() != height || target.width() != width || target.channels() != 3) {
    throw InputError("target must be an RGB image of the render size");
  }
  Setup s = setup(model, width, height, options);
  const int ts = s.grid.size;
  const double scale = 1.0 / (3.0 * static_cast<double>(width) * static_cast<double>(height));

  const std::size_t tiles = s.grid.lists.size();
  std::vector<std::vector<Gaussian2D>> tile_grads(tiles);
  std::vector<std::vector<std::uint8_t>> tile_hits(tiles);
  std::vector<double> tile_loss(tiles, 0.0);

  parallel_for(
      tiles,
      [&](std::size_t t) {
        const auto& list = s.grid.lists[t];
        auto& grads = tile_grads[t];
        auto& hits = tile_hits[t];
        grads.assign(list.size(), Gaussian2D{});
        hits.assign(list.size(), 0);
        std::vector<Sample> samples;
        samples.reserve(list.size());
        double loss = 0.0;
        int ty = static_cast<int>(t) / s.grid.cols;
        int tx = static_cast<int>(t) % s.grid.cols;
        for (int y = ty * ts; y < std::min(height, (ty + 1) * ts); ++y) {
          double v = (y + 0.5) / height;
          for (int x = tx * ts; x < std::min(width, (tx + 1) * ts); ++x) {
            double u = (x + 0.5) / width;
            samples.clear();
            auto c = shade<true>(s, list, u, v, &samples);
            std::array<double, 3> g{};
            for (int ch = 0; ch < 3; ++ch) {
              double r = c[ch] - target.at(y, x, ch);
              loss += std::abs(r);
              g[ch] = r > 0.0 ? scale : (r < 0.0 ? -scale : 0.0);
            }
            if (g[0] == 0.0 && g[1] == 0.0 && g[2] == 0.0) {
              for (const Sample& e : samples) hits[e.local] = 1;
              continue;
            }
            // Reverse pass: behind = color composited after the current sample.
            std::array<double, 3> behind{0.0, 0.0, 0.0};
            for (auto it = samples.rbegin(); it != samples.rend(); ++it) {
              const Sample& e = *it;
              const Prepared& p = s.prepared[list[e.local]];
              Gaussian2D& d = grads[e.local];
              hits[e.local] = 1;
              double tw = e.trans * e.weight;
              double dw = 0.0;
              double inv_keep = 1.0 / (1.0 - e.weight);
              for (int ch = 0; ch < 3; ++ch) {
                d.color_raw[ch] += g[ch] * tw * p.color[ch] * (1.0 - p.color[ch]);
                dw += g[ch] * (e.trans * p.color[ch] - behind[ch] * inv_keep);
                behind[ch] += tw * p.color[ch];
              }
              if (e.clamped) continue;
              d.opacity_raw += dw * e.gauss * p.opacity * (1.0 - p.opacity);
              double dq = -0.5 * dw * p.opacity * e.gauss;
              d.pos[0] += dq * -2.0 * (p.qa * e.dx + p.qb * e.dy);
              d.pos[1] += dq * -2.0 * (p.qb * e.dx + p.qc * e.dy);
              double l0 = p.cs * e.dx + p.sn * e.dy;
              double l1 = -p.sn * e.dx + p.cs * e.dy;
              d.log_scale[0] += dq * -2.0 * l0 * l0 * p.inv_var0;
              d.log_scale[1] += dq * -2.0 * l1 * l1 * p.inv_var1;
              d.rotation += dq * 2.0 * l0 * l1 * (p.inv_var0 - p.inv_var1);
            }
          }
        }
        tile_loss[t] = loss;
      },
      static_cast<int>(workers_for(options)));

  LossGrad out;
  out.grads.assign(model.size(), Gaussian2D{});
  out.visible.assign(model.size(), 0);
  double loss = 0.0;
  for (std::size_t t = 0; t < tiles; ++t) {
    loss += tile_loss[t];
    const auto& list = s.grid.lists[t];
    for (std::size_t j = 0; j < list.size(); ++j) {
      Gaussian2D& d = out.grads[list[j]];
      const Gaussian2D& src = tile_grads[t][j];
      for (int k = 0; k < kParamCount; ++k) param(d, k) += param(src, k);
      out.visible[list[j]] |= tile_hits[t][j];
    }
  }
  out.loss = loss * scale;
  if (!std::isfinite(out.loss)) throw NumericError("non-finite loss");
  out.pos_grad_norm.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    out.pos_grad_norm[i] = std::hypot(out.grads[i].pos[0], out.grads[i].pos[1]);
  }
  return out;
}

SplatModel init_from_image(const Image& target, int p_init, std::uint64_t seed) {
  if (p_init < 1) throw InputError("p_init must be at least 1");
  if (target.empty()) throw InputError("empty target image");
  Image rgb = to_rgb(target);
  const int gx = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p_init))));
  const int gy = (p_init + gx - 1) / gx;
  std::mt19937_64 rng(seed);
  SplatModel model;
  model.primitives.reserve(static_cast<std::size_t>(p_init));
  const double log_sigma = -0.5 * std::log(static_cast<double>(p_init));
  const double op = logit(0.1);
  for (int i = 0; i < p_init; ++i) {
    int cx = i % gx;
    int cy = i / gx;
    double u = (cx + unit_uniform(rng())) / gx;
    double v = (cy + unit_uniform(rng())) / gy;
    int px = std::clamp(static_cast<int>(u * rgb.width()), 0, rgb.width() - 1);
    int py = std::clamp(static_cast<int>(v * rgb.height()), 0, rgb.height() - 1);
    Gaussian2D g;
    g.pos = {u, v};
    g.log_scale = {log_sigma, log_sigma};
    g.opacity_raw = op;
    for (int ch = 0; ch < 3; ++ch) g.color_raw[ch] = logit(std::clamp(rgb.at(py, px, ch), 1e-3, 1.0 - 1e-3));
    model.primitives.push_back(g);
  }
  return model;
}

}  // namespace dashgs::splat
