#pragma once

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gml/grid.hpp"
#include "gml/segmodel.hpp"
#include "gml/synthdata.hpp"

namespace gml {

/// 2|A ∩ B| / (|A| + |B|); two empty masks score 1. Throws ShapeMismatch or NotBinary.
double dsc(const Grid& pred, const Grid& truth);

/// cell = 1 iff p >= threshold.
Grid binarize(const Grid& p, double threshold = 0.5);

/// sum w_i d_i / sum w_i. Throws ShapeMismatch on length mismatch, InvalidSpec
/// on non-positive weights.
double aggregate_dsc(std::span<const double> site_dscs, std::span<const double> weights);

/// Running elementwise mean of forward(model_i, image). Throws IncompatibleModels.
Grid ensemble_predict(std::span<const ModelWeights> models, const Grid& image);

using Predictor = std::function<Grid(const Grid&)>;

Predictor model_predictor(const ModelWeights& w);
Predictor ensemble_predictor(std::vector<ModelWeights> models);

/// Mean per-case DSC of binarize(predict(image)) against the case masks.
double mean_dsc(const Predictor& predict, const Dataset& data, double threshold = 0.5);

enum class EvalSplit { LocalTest, OutOfSample };
std::string_view to_string(EvalSplit split) noexcept;
EvalSplit eval_split_from_string(std::string_view name);

struct EvalRow {
  std::string site;
  EvalSplit split = EvalSplit::LocalTest;
  double mean_dsc = 0.0;
  std::size_t n_cases = 0;

  friend bool operator==(const EvalRow&, const EvalRow&) = default;
};

/// One block of a results table. `aggregated_dsc` is the weighted mean of the
/// LocalTest rows with `local_weights`; `aggregated_out_of_sample` is the
/// weighted mean of the OutOfSample rows with `out_of_sample_weights`.
struct EvalReport {
  std::string method;
  bool site_specific = false;  // rows come from one model per participant
  std::vector<EvalRow> rows;
  std::vector<double> local_weights;
  std::vector<double> out_of_sample_weights;
  double aggregated_dsc = 0.0;
  double aggregated_out_of_sample = 0.0;

  std::vector<double> dscs(EvalSplit split) const;
  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Site-specific models: row (site_i, LocalTest) scores model_i on local_tests[i];
/// row (site_i, OutOfSample) scores model_i on the union of `held_out`. Both
/// aggregates use `weights` (one per participant).
EvalReport evaluate_site_models(std::string method, std::span<const Predictor> site_models,
                                std::span<const Dataset> local_tests, std::span<const Dataset> held_out,
                                std::span<const double> weights, double threshold = 0.5);

/// One global predictor: LocalTest rows per participant aggregated with
/// `weights`; OutOfSample rows per held-out site aggregated by their case counts.
EvalReport evaluate_global(std::string method, const Predictor& model, std::span<const Dataset> local_tests,
                           std::span<const Dataset> held_out, std::span<const double> weights,
                           double threshold = 0.5);

}  // namespace gml
