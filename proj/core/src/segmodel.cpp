#include "gml/segmodel.hpp"

#include <algorithm>
#include <cmath>

namespace gml {

namespace {

struct Volume {
  std::int64_t depth = 1, height = 1, width = 1;
  std::size_t voxels() const { return static_cast<std::size_t>(depth * height * width); }
};

struct Tap {
  std::int64_t dz = 0, dy = 0, dx = 0;
  Tap operator-() const { return {-dz, -dy, -dx}; }
};

Volume volume_of(const Grid& g) {
  if (g.rank() == 2) return {1, g.extent(0), g.extent(1)};
  return {g.extent(0), g.extent(1), g.extent(2)};
}

std::vector<Tap> kernel_taps(const ArchSpec& arch) {
  const std::int64_t k = arch.kernel;
  const std::int64_t r = k / 2;
  const std::int64_t kd = arch.spatial_rank == 3 ? k : 1;
  const std::int64_t rd = arch.spatial_rank == 3 ? r : 0;
  std::vector<Tap> taps;
  taps.reserve(arch.taps());
  for (std::int64_t z = 0; z < kd; ++z)
    for (std::int64_t y = 0; y < k; ++y)
      for (std::int64_t x = 0; x < k; ++x) taps.push_back({z - rd, y - r, x - r});
  return taps;
}

// out[v] += weight * in[v + tap] wherever v + tap lies inside the volume.
void shifted_axpy(const double* in, double* out, const Volume& vol, const Tap& t, double weight) {
  const auto z0 = std::max<std::int64_t>(0, -t.dz), z1 = std::min(vol.depth, vol.depth - t.dz);
  const auto y0 = std::max<std::int64_t>(0, -t.dy), y1 = std::min(vol.height, vol.height - t.dy);
  const auto x0 = std::max<std::int64_t>(0, -t.dx), x1 = std::min(vol.width, vol.width - t.dx);
  for (auto z = z0; z < z1; ++z) {
    for (auto y = y0; y < y1; ++y) {
      const double* src = in + ((z + t.dz) * vol.height + (y + t.dy)) * vol.width + t.dx;
      double* dst = out + (z * vol.height + y) * vol.width;
      for (auto x = x0; x < x1; ++x) dst[x] += weight * src[x];
    }
  }
}

// sum_v a[v] * b[v + tap] over v with v + tap inside the volume.
double shifted_dot(const double* a, const double* b, const Volume& vol, const Tap& t) {
  const auto z0 = std::max<std::int64_t>(0, -t.dz), z1 = std::min(vol.depth, vol.depth - t.dz);
  const auto y0 = std::max<std::int64_t>(0, -t.dy), y1 = std::min(vol.height, vol.height - t.dy);
  const auto x0 = std::max<std::int64_t>(0, -t.dx), x1 = std::min(vol.width, vol.width - t.dx);
  double acc = 0.0;
  for (auto z = z0; z < z1; ++z) {
    for (auto y = y0; y < y1; ++y) {
      const double* pa = a + (z * vol.height + y) * vol.width;
      const double* pb = b + ((z + t.dz) * vol.height + (y + t.dy)) * vol.width + t.dx;
      for (auto x = x0; x < x1; ++x) acc += pa[x] * pb[x];
    }
  }
  return acc;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void check_inputs(const ModelWeights& w, std::span<const Grid> channels) {
  w.arch.validate();
  if (w.params.size() != w.arch.param_count()) {
    throw Error(ErrorCode::IncompatibleModels, "params length " + std::to_string(w.params.size()) +
                                                   " != " + std::to_string(w.arch.param_count()));
  }
  if (!w.all_finite()) throw Error(ErrorCode::NonFiniteModel, "model has non-finite parameters");
  if (channels.size() != static_cast<std::size_t>(w.arch.in_channels)) {
    throw Error(ErrorCode::ShapeMismatch, "expected " + std::to_string(w.arch.in_channels) +
                                              " input channels, got " + std::to_string(channels.size()));
  }
  for (const Grid& c : channels) {
    if (c.rank() != static_cast<std::size_t>(w.arch.spatial_rank)) {
      throw Error(ErrorCode::ShapeMismatch, "image rank " + std::to_string(c.rank()) +
                                                " != spatial_rank " + std::to_string(w.arch.spatial_rank));
    }
    require_same_shape(c, channels.front(), "input channels");
  }
}

}  // namespace

void ArchSpec::validate() const {
  if (spatial_rank != 2 && spatial_rank != 3)
    throw Error(ErrorCode::InvalidSpec, "spatial_rank must be 2 or 3");
  if (in_channels < 1) throw Error(ErrorCode::InvalidSpec, "in_channels must be >= 1");
  if (hidden_channels < 1) throw Error(ErrorCode::InvalidSpec, "hidden_channels must be >= 1");
  if (kernel < 1 || kernel % 2 == 0) throw Error(ErrorCode::InvalidSpec, "kernel must be odd and >= 1");
}

std::size_t ArchSpec::taps() const {
  std::size_t t = 1;
  for (int i = 0; i < spatial_rank; ++i) t *= static_cast<std::size_t>(kernel);
  return t;
}

std::size_t ArchSpec::param_count() const { return ParamLayout::of(*this).total; }

ParamLayout ParamLayout::of(const ArchSpec& arch) {
  const auto hidden = static_cast<std::size_t>(arch.hidden_channels);
  const auto in = static_cast<std::size_t>(arch.in_channels);
  const auto taps = arch.taps();
  ParamLayout l;
  l.conv1_weight = 0;
  l.conv1_bias = l.conv1_weight + hidden * in * taps;
  l.conv2_weight = l.conv1_bias + hidden;
  l.conv2_bias = l.conv2_weight + hidden * taps;
  l.total = l.conv2_bias + 1;
  return l;
}

bool ModelWeights::all_finite() const noexcept {
  return std::all_of(params.begin(), params.end(), [](double v) { return std::isfinite(v); });
}

ModelWeights zero_weights(const ArchSpec& arch) {
  arch.validate();
  return {arch, std::vector<double>(arch.param_count(), 0.0)};
}

ModelWeights init_weights(const ArchSpec& arch, Rng& rng) {
  ModelWeights w = zero_weights(arch);
  const auto l = ParamLayout::of(arch);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(arch.in_channels * arch.taps()));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(arch.hidden_channels * arch.taps()));
  for (std::size_t i = l.conv1_weight; i < l.conv2_weight; ++i) w.params[i] = rng.uniform(-bound1, bound1);
  for (std::size_t i = l.conv2_weight; i < l.total; ++i) w.params[i] = rng.uniform(-bound2, bound2);
  return w;
}

Grid forward(const ModelWeights& w, const Grid& image) { return forward(w, std::span(&image, 1)); }

Grid forward(const ModelWeights& w, std::span<const Grid> channels) {
  return forward_trace(w, channels).prob;
}

ForwardTrace forward_trace(const ModelWeights& w, std::span<const Grid> channels) {
  check_inputs(w, channels);
  const auto& arch = w.arch;
  const auto l = ParamLayout::of(arch);
  const auto taps = kernel_taps(arch);
  const Volume vol = volume_of(channels.front());
  const std::size_t nvox = vol.voxels();
  const auto hidden = static_cast<std::size_t>(arch.hidden_channels);
  const auto in = static_cast<std::size_t>(arch.in_channels);
  const double* p = w.params.data();

  ForwardTrace tr;
  tr.hidden_pre.assign(hidden * nvox, 0.0);
  std::vector<double> act(nvox);
  std::vector<double> logits(nvox, p[l.conv2_bias]);

  for (std::size_t h = 0; h < hidden; ++h) {
    double* pre = tr.hidden_pre.data() + h * nvox;
    std::fill(pre, pre + nvox, p[l.conv1_bias + h]);
    for (std::size_t c = 0; c < in; ++c) {
      const double* x = channels[c].values().data();
      const double* k1 = p + l.conv1_weight + (h * in + c) * taps.size();
      for (std::size_t t = 0; t < taps.size(); ++t) shifted_axpy(x, pre, vol, taps[t], k1[t]);
    }
    for (std::size_t v = 0; v < nvox; ++v) act[v] = pre[v] > 0.0 ? pre[v] : 0.0;
    const double* k2 = p + l.conv2_weight + h * taps.size();
    for (std::size_t t = 0; t < taps.size(); ++t) shifted_axpy(act.data(), logits.data(), vol, taps[t], k2[t]);
  }

  tr.prob = Grid(channels.front().shape());
  for (std::size_t v = 0; v < nvox; ++v) tr.prob[v] = sigmoid(logits[v]);
  return tr;
}

Gradient backward(const ModelWeights& w, const Grid& image, const Grid& upstream) {
  std::span<const Grid> channels(&image, 1);
  return backward(w, channels, forward_trace(w, channels), upstream);
}

Gradient backward(const ModelWeights& w, std::span<const Grid> channels, const ForwardTrace& trace,
                  const Grid& upstream) {
  check_inputs(w, channels);
  require_same_shape(upstream, trace.prob, "backward upstream");
  const auto& arch = w.arch;
  const auto l = ParamLayout::of(arch);
  const auto taps = kernel_taps(arch);
  const Volume vol = volume_of(channels.front());
  const std::size_t nvox = vol.voxels();
  const auto hidden = static_cast<std::size_t>(arch.hidden_channels);
  const auto in = static_cast<std::size_t>(arch.in_channels);
  const double* p = w.params.data();

  Gradient g(l.total, 0.0);

  // Through the sigmoid.
  std::vector<double> dlogit(nvox);
  for (std::size_t v = 0; v < nvox; ++v) {
    const double s = trace.prob[v];
    dlogit[v] = upstream[v] * s * (1.0 - s);
  }
  double db2 = 0.0;
  for (double d : dlogit) db2 += d;
  g[l.conv2_bias] = db2;

  std::vector<double> act(nvox);
  std::vector<double> dact(nvox);
  for (std::size_t h = 0; h < hidden; ++h) {
    const double* pre = trace.hidden_pre.data() + h * nvox;
    for (std::size_t v = 0; v < nvox; ++v) act[v] = pre[v] > 0.0 ? pre[v] : 0.0;

    const double* k2 = p + l.conv2_weight + h * taps.size();
    double* dk2 = g.data() + l.conv2_weight + h * taps.size();
    std::fill(dact.begin(), dact.end(), 0.0);
    for (std::size_t t = 0; t < taps.size(); ++t) {
      dk2[t] = shifted_dot(dlogit.data(), act.data(), vol, taps[t]);
      shifted_axpy(dlogit.data(), dact.data(), vol, -taps[t], k2[t]);
    }

    // Through the ReLU.
    double db1 = 0.0;
    for (std::size_t v = 0; v < nvox; ++v) {
      if (!(pre[v] > 0.0)) dact[v] = 0.0;
      db1 += dact[v];
    }
    g[l.conv1_bias + h] = db1;

    for (std::size_t c = 0; c < in; ++c) {
      const double* x = channels[c].values().data();
      double* dk1 = g.data() + l.conv1_weight + (h * in + c) * taps.size();
      for (std::size_t t = 0; t < taps.size(); ++t) dk1[t] = shifted_dot(dact.data(), x, vol, taps[t]);
    }
  }
  return g;
}

}  // namespace gml
