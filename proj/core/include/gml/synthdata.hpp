#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "gml/grid.hpp"
#include "gml/rng.hpp"

namespace gml {

/// Per-site generator knobs. Sites differ in lesion size, contrast and noise,
/// which is what makes the participants non-IID.
struct SiteGenSpec {
  std::string site_id;
  int n_cases = 0;
  double blob_radius_min = 2.0;
  double blob_radius_max = 4.0;
  double tumor_intensity = 1.0;
  double background_noise_sigma = 0.5;
  double contrast_scale = 1.0;
  double tumor_free_fraction = 0.0;

  /// Throws InvalidSpec.
  void validate(std::int64_t image_extent) const;
};

struct Case {
  std::string case_id;
  Grid image;
  Grid mask;

  friend bool operator==(const Case&, const Case&) = default;
};

struct Dataset {
  std::string site_id;
  std::vector<Case> cases;

  std::size_t size() const noexcept { return cases.size(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct SplitRatios {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;

  void validate() const;
};

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
  friend bool operator==(const SplitSizes&, const SplitSizes&) = default;
};

struct DatasetSplit {
  Dataset train, val, test;
};

/// One elliptical blob per tumor case; image = contrast * (tumor_intensity * mask)
/// + N(0, sigma), then standardized per case to zero mean and unit variance.
Dataset generate_site(const SiteGenSpec& spec, std::int64_t image_extent, Rng& rng);

/// round_half_up for train and val, test takes the remainder. Throws
/// SplitTooSmall if n < 3 or any partition would be empty.
SplitSizes split_sizes(std::size_t n, const SplitRatios& r);
DatasetSplit split_dataset(const Dataset& d, const SplitRatios& r, Rng& rng);

/// Concatenates cases in argument order; site_id is joined with '+'.
Dataset concat(std::span<const Dataset> parts);

// "GMLD" file format, little-endian. All cases in one file share one shape.
std::size_t dataset_file_size(const Dataset& d);
std::vector<std::uint8_t> dataset_encode(const Dataset& d);
Dataset dataset_decode(std::span<const std::uint8_t> bytes);
void dataset_write(const Dataset& d, const std::filesystem::path& path);
Dataset dataset_read(const std::filesystem::path& path);

}  // namespace gml
