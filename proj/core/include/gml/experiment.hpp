#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gml/config.hpp"
#include "gml/events.hpp"
#include "gml/metrics.hpp"

namespace gml {

enum class Method { Gml, FedAvg, Pooled, Individual };

std::string_view to_string(Method m) noexcept;
/// Throws BadConfig.
Method method_from_string(std::string_view name);

struct ExperimentData {
  std::vector<DatasetSplit> participants;
  std::vector<Dataset> held_out;

  std::vector<Dataset> local_tests() const;
  std::vector<Dataset> train_sets() const;
};

/// Participant data from streams "data/site/{id}" and "split/site/{id}",
/// held-out data from "data/heldout/{id}".
ExperimentData generate_data(const ExperimentConfig& cfg);

/// Aggregation weights for participants: the explicit list from the config, or
/// each participant's local test case count.
std::vector<double> aggregation_weights(const ExperimentConfig& cfg, const ExperimentData& data);

struct RunOutcome {
  Method method = Method::Gml;
  std::vector<EvalReport> reports;  // site-specific block first when present
  EventLog log;
  CommunicationTotals comms;
  std::vector<std::pair<std::string, ModelWeights>> models;  // (name, weights) as written to models/
  int post_warmup_rounds = 0;
};

/// Trains and evaluates one method entirely in memory.
RunOutcome run_method(const ExperimentConfig& cfg, Method method, const ExperimentData& data);
RunOutcome run_method(const ExperimentConfig& cfg, Method method);

/// Writes the datasets of `cfg` under out_dir/data/ and returns the files written.
std::vector<std::filesystem::path> cmd_gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// Runs `method` and writes out_dir/{method}/ with:
///   config.json, data/*.gmld, models/*.gmlw, events.jsonl, report.csv, report.json
/// On failure the partially written method directory is removed and the error
/// rethrown. Returns the method directory.
std::filesystem::path cmd_run(const ExperimentConfig& cfg, Method method, const std::filesystem::path& out_dir);

std::string report_csv(std::span<const EvalReport> reports);
std::string report_json(const RunOutcome& outcome, const ExperimentConfig& cfg);

/// A completed run directory as read back from disk.
struct RunSummary {
  std::filesystem::path dir;
  std::string method;
  std::vector<EvalReport> reports;
  CommunicationTotals comms;  // recomputed from events.jsonl
  int post_warmup_rounds = 0;
};

/// Accepts a method directory (holding report.json) or an out_dir holding
/// method subdirectories. Throws MissingArtifact.
std::vector<RunSummary> load_runs(const std::filesystem::path& dir);

/// CSV blocks: site-specific local-test DSCs, site models on local vs
/// out-of-sample data, global/ensemble aggregates, communication totals and
/// the GML:FedAvg message ratio when both are present. Needs >= 2 runs in total.
std::string cmd_compare(std::span<const std::filesystem::path> dirs);

}  // namespace gml
