#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gml/gossip.hpp"
#include "gml/losses.hpp"
#include "gml/segmodel.hpp"
#include "gml/synthdata.hpp"

namespace gml {

struct ParticipantSpec {
  SiteGenSpec gen;
  SplitRatios split;
};

struct EvalConfig {
  double threshold = 0.5;
  /// Empty means "test_counts": weight each participant by its local test size.
  std::optional<std::vector<double>> aggregation_weights;
};

/// Declarative description of one experiment. The defaults are the desk-scale
/// setup: three participants (16/28/36 cases), two held-out sites of 10 cases,
/// 32x32 images, 60 rounds with 20 of warm-up, single-exchange gossip.
struct ExperimentConfig {
  std::uint64_t seed = 2024;
  std::int64_t image_extent = 32;
  std::vector<ParticipantSpec> sites;
  std::vector<SiteGenSpec> held_out_sites;
  ArchSpec arch;
  OptimizerConfig optimizer;
  Schedule schedule;
  LossOptions loss;
  EvalConfig eval;

  /// Throws InvalidConfig naming the offending field.
  void validate() const;
  TrainingOptions training_options() const;
};

std::vector<ParticipantSpec> default_participants();
std::vector<SiteGenSpec> default_held_out_sites();
ExperimentConfig default_config();

/// Strict parse: unknown keys and type errors raise BadConfig (with the line
/// number for syntax errors); invariant violations raise InvalidConfig.
ExperimentConfig config_parse(std::string_view json_text);
ExperimentConfig config_load(const std::filesystem::path& path);
/// Fully expanded JSON (every field explicit), 2-space indented.
std::string config_to_json(const ExperimentConfig& cfg);

std::string_view to_string(GossipMode mode) noexcept;
std::string_view to_string(KldVariant v) noexcept;
std::string_view to_string(OptimizerKind k) noexcept;

}  // namespace gml
