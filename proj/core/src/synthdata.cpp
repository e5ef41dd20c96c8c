#include "gml/synthdata.hpp"

#include <cmath>
#include <cstdio>

#include "byteio.hpp"

namespace gml {

void SiteGenSpec::validate(std::int64_t image_extent) const {
  auto bad = [&](const std::string& what) { throw Error(ErrorCode::InvalidSpec, "site '" + site_id + "': " + what); };
  if (site_id.empty()) throw Error(ErrorCode::InvalidSpec, "site_id must be non-empty");
  if (n_cases < 0) bad("n_cases must be >= 0");
  if (image_extent < 8) bad("image_extent must be >= 8");
  if (!(blob_radius_min > 0.0) || blob_radius_min > blob_radius_max) bad("need 0 < blob_radius_min <= blob_radius_max");
  if (!(blob_radius_max < static_cast<double>(image_extent) / 2.0)) bad("blob cannot fit: blob_radius_max >= extent / 2");
  if (!(background_noise_sigma >= 0.0)) bad("background_noise_sigma must be >= 0");
  if (!(tumor_free_fraction >= 0.0 && tumor_free_fraction <= 1.0)) bad("tumor_free_fraction must be in [0,1]");
  if (!std::isfinite(tumor_intensity) || !std::isfinite(contrast_scale)) bad("intensity and contrast must be finite");
}

namespace {

std::string case_label(const std::string& site_id, int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", index);
  return site_id + "-" + buf;
}

void standardize(Grid& g) {
  const double n = static_cast<double>(g.size());
  const double mean = g.sum() / n;
  double var = 0.0;
  for (double v : g) var += (v - mean) * (v - mean);
  var /= n;
  const double inv_std = var > 0.0 ? 1.0 / std::sqrt(var) : 1.0;
  for (double& v : g) v = (v - mean) * inv_std;
}

}  // namespace

Dataset generate_site(const SiteGenSpec& spec, std::int64_t image_extent, Rng& rng) {
  spec.validate(image_extent);
  const std::int64_t n = image_extent;
  Dataset d{spec.site_id, {}};
  d.cases.reserve(static_cast<std::size_t>(spec.n_cases));

  for (int c = 0; c < spec.n_cases; ++c) {
    Grid mask({n, n}, 0.0);
    if (!rng.bernoulli(spec.tumor_free_fraction)) {
      const double ry = rng.uniform(spec.blob_radius_min, spec.blob_radius_max);
      const double rx = rng.uniform(spec.blob_radius_min, spec.blob_radius_max);
      const double hi = static_cast<double>(n - 1);
      const double cy = rng.uniform(ry, hi - ry);
      const double cx = rng.uniform(rx, hi - rx);
      for (std::int64_t y = 0; y < n; ++y) {
        for (std::int64_t x = 0; x < n; ++x) {
          const double dy = (static_cast<double>(y) - cy) / ry;
          const double dx = (static_cast<double>(x) - cx) / rx;
          if (dy * dy + dx * dx <= 1.0) mask[static_cast<std::size_t>(y * n + x)] = 1.0;
        }
      }
    }
    Grid image({n, n});
    for (std::size_t i = 0; i < image.size(); ++i) {
      image[i] = spec.contrast_scale * (spec.tumor_intensity * mask[i]) + spec.background_noise_sigma * rng.normal();
    }
    standardize(image);
    d.cases.push_back({case_label(spec.site_id, c), std::move(image), std::move(mask)});
  }
  return d;
}

void SplitRatios::validate() const {
  if (train < 0.0 || val < 0.0 || test < 0.0) throw Error(ErrorCode::InvalidSpec, "split ratios must be non-negative");
  if (std::abs(train + val + test - 1.0) > 1e-9) throw Error(ErrorCode::InvalidSpec, "split ratios must sum to 1");
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& r) {
  r.validate();
  if (n < 3) throw Error(ErrorCode::SplitTooSmall, "need at least 3 cases, have " + std::to_string(n));
  // The 1e-9 nudge keeps products like 0.7 * 55 = 38.4999... on the half-up side.
  auto round_half_up = [](double x) { return static_cast<std::size_t>(std::floor(x + 0.5 + 1e-9)); };
  const double dn = static_cast<double>(n);
  SplitSizes s{round_half_up(r.train * dn), round_half_up(r.val * dn), 0};
  if (s.train + s.val > n) {
    // Test floors at 0 and the overflow comes out of train.
    s.train = n - s.val;
  }
  s.test = n - s.train - s.val;
  if (s.train == 0 || s.val == 0 || s.test == 0) {
    throw Error(ErrorCode::SplitTooSmall, "split of " + std::to_string(n) + " cases leaves an empty partition (" +
                                              std::to_string(s.train) + "/" + std::to_string(s.val) + "/" +
                                              std::to_string(s.test) + ")");
  }
  return s;
}

DatasetSplit split_dataset(const Dataset& d, const SplitRatios& r, Rng& rng) {
  const SplitSizes s = split_sizes(d.size(), r);
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  DatasetSplit out{{d.site_id, {}}, {d.site_id, {}}, {d.site_id, {}}};
  for (std::size_t k = 0; k < order.size(); ++k) {
    Dataset& dst = k < s.train ? out.train : (k < s.train + s.val ? out.val : out.test);
    dst.cases.push_back(d.cases[order[k]]);
  }
  return out;
}

Dataset concat(std::span<const Dataset> parts) {
  Dataset out;
  for (const Dataset& p : parts) {
    if (!out.site_id.empty()) out.site_id += "+";
    out.site_id += p.site_id;
    out.cases.insert(out.cases.end(), p.cases.begin(), p.cases.end());
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kMagic = "GMLD";
constexpr std::uint16_t kVersion = 1;
}  // namespace

std::size_t dataset_file_size(const Dataset& d) {
  std::size_t bytes = 4 + 2 + 2 + d.site_id.size() + 4 + 1;
  if (d.cases.empty()) return bytes;
  bytes += 4 * d.cases.front().image.rank();
  for (const Case& c : d.cases) bytes += 2 + c.case_id.size() + 9 * c.image.size();
  return bytes;
}

std::vector<std::uint8_t> dataset_encode(const Dataset& d) {
  const Shape shape = d.cases.empty() ? Shape{} : d.cases.front().image.shape();
  for (const Case& c : d.cases) {
    if (c.image.shape() != shape || c.mask.shape() != shape)
      throw Error(ErrorCode::ShapeMismatch, "all cases in a dataset file must share one shape");
    if (!c.mask.is_mask()) throw Error(ErrorCode::NotBinary, "mask of case " + c.case_id + " is not binary");
  }
  if (d.site_id.size() > 0xffff) throw Error(ErrorCode::InvalidSpec, "site_id too long");

  detail::ByteWriter out;
  out.bytes(kMagic);
  out.u16(kVersion);
  out.u16(static_cast<std::uint16_t>(d.site_id.size()));
  out.bytes(d.site_id);
  out.u32(static_cast<std::uint32_t>(d.cases.size()));
  out.u8(static_cast<std::uint8_t>(shape.size()));
  for (auto e : shape) out.u32(static_cast<std::uint32_t>(e));
  for (const Case& c : d.cases) {
    out.u16(static_cast<std::uint16_t>(c.case_id.size()));
    out.bytes(c.case_id);
    for (double v : c.image) out.f64(v);
    for (double v : c.mask) out.u8(v != 0.0 ? 1 : 0);
  }
  return out.take();
}

Dataset dataset_decode(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes, ErrorCode::CorruptDataset);
  if (in.bytes(4) != kMagic) in.fail("bad magic");
  if (const auto v = in.u16(); v != kVersion) in.fail("unsupported version " + std::to_string(v));

  Dataset d;
  d.site_id = in.bytes(in.u16());
  const std::uint32_t n_cases = in.u32();
  const std::uint8_t rank = in.u8();
  if (n_cases > 0 && rank != 2 && rank != 3) in.fail("rank must be 2 or 3");
  Shape shape;
  std::size_t cells = 1;
  for (int i = 0; i < rank; ++i) {
    const std::uint32_t e = in.u32();
    if (e == 0) in.fail("zero extent");
    shape.push_back(e);
    cells *= e;
  }
  // Each case needs at least 2 + 9 * cells bytes; reject absurd counts before allocating.
  if (n_cases > 0 && in.remaining() / (2 + 9 * cells) < n_cases) in.fail("truncated: too few bytes for " + std::to_string(n_cases) + " cases");

  d.cases.reserve(n_cases);
  for (std::uint32_t c = 0; c < n_cases; ++c) {
    Case k;
    k.case_id = in.bytes(in.u16());
    std::vector<double> img(cells), msk(cells);
    for (auto& v : img) v = in.f64();
    for (auto& v : msk) {
      const auto b = in.u8();
      if (b > 1) in.fail("mask byte not in {0,1}");
      v = b;
    }
    k.image = Grid(shape, std::move(img));
    k.mask = Grid(shape, std::move(msk));
    d.cases.push_back(std::move(k));
  }
  if (in.remaining() != 0) in.fail("trailing bytes");
  return d;
}

void dataset_write(const Dataset& d, const std::filesystem::path& path) { detail::write_file(path, dataset_encode(d)); }

Dataset dataset_read(const std::filesystem::path& path) { return dataset_decode(detail::read_file(path)); }

}  // namespace gml
