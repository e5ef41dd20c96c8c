#include "gml/metrics.hpp"

namespace gml {

double dsc(const Grid& pred, const Grid& truth) {
  require_same_shape(pred, truth, "dsc");
  if (!pred.is_mask() || !truth.is_mask()) throw Error(ErrorCode::NotBinary, "dsc inputs must be binary masks");
  std::size_t inter = 0, a = 0, b = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0.0, t = truth[i] != 0.0;
    inter += p && t;
    a += p;
    b += t;
  }
  if (a + b == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(a + b);
}

Grid binarize(const Grid& p, double threshold) {
  return map1(p, [threshold](double v) { return v >= threshold ? 1.0 : 0.0; });
}

double aggregate_dsc(std::span<const double> site_dscs, std::span<const double> weights) {
  if (site_dscs.size() != weights.size())
    throw Error(ErrorCode::ShapeMismatch, "aggregate_dsc: " + std::to_string(site_dscs.size()) + " values vs " +
                                              std::to_string(weights.size()) + " weights");
  if (site_dscs.empty()) throw Error(ErrorCode::NoData, "aggregate_dsc: nothing to aggregate");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] > 0.0)) throw Error(ErrorCode::InvalidSpec, "aggregate_dsc: weights must be positive");
    num += weights[i] * site_dscs[i];
    den += weights[i];
  }
  return num / den;
}

Grid ensemble_predict(std::span<const ModelWeights> models, const Grid& image) {
  if (models.empty()) throw Error(ErrorCode::NoSites, "ensemble needs at least one model");
  for (const auto& m : models)
    if (m.arch != models.front().arch) throw Error(ErrorCode::IncompatibleModels, "ensemble members differ in architecture");

  // Incremental mean: identical members reproduce the single-model output exactly.
  Grid mean = forward(models.front(), image);
  for (std::size_t k = 1; k < models.size(); ++k) {
    const Grid p = forward(models[k], image);
    const double inv = 1.0 / static_cast<double>(k + 1);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += (p[i] - mean[i]) * inv;
  }
  return mean;
}

Predictor model_predictor(const ModelWeights& w) {
  return [w](const Grid& image) { return forward(w, image); };
}

Predictor ensemble_predictor(std::vector<ModelWeights> models) {
  return [models = std::move(models)](const Grid& image) { return ensemble_predict(models, image); };
}

double mean_dsc(const Predictor& predict, const Dataset& data, double threshold) {
  if (data.cases.empty()) throw Error(ErrorCode::NoData, "cannot evaluate on empty dataset '" + data.site_id + "'");
  double total = 0.0;
  for (const Case& c : data.cases) total += dsc(binarize(predict(c.image), threshold), c.mask);
  return total / static_cast<double>(data.size());
}

std::string_view to_string(EvalSplit split) noexcept {
  return split == EvalSplit::LocalTest ? "local_test" : "out_of_sample";
}

EvalSplit eval_split_from_string(std::string_view name) {
  if (name == "local_test") return EvalSplit::LocalTest;
  if (name == "out_of_sample") return EvalSplit::OutOfSample;
  throw Error(ErrorCode::BadConfig, "unknown split '" + std::string(name) + "'");
}

std::vector<double> EvalReport::dscs(EvalSplit split) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.split == split) out.push_back(r.mean_dsc);
  return out;
}

namespace {

void check_eval_inputs(std::span<const Dataset> local_tests, std::span<const double> weights) {
  if (local_tests.empty()) throw Error(ErrorCode::NoData, "no local test sets");
  if (weights.size() != local_tests.size())
    throw Error(ErrorCode::ShapeMismatch, "need one aggregation weight per participant");
}

}  // namespace

EvalReport evaluate_site_models(std::string method, std::span<const Predictor> site_models,
                                std::span<const Dataset> local_tests, std::span<const Dataset> held_out,
                                std::span<const double> weights, double threshold) {
  check_eval_inputs(local_tests, weights);
  if (site_models.size() != local_tests.size())
    throw Error(ErrorCode::ShapeMismatch, "need one site model per local test set");

  EvalReport rep;
  rep.method = std::move(method);
  rep.site_specific = true;
  rep.local_weights.assign(weights.begin(), weights.end());
  for (std::size_t i = 0; i < local_tests.size(); ++i) {
    rep.rows.push_back({local_tests[i].site_id, EvalSplit::LocalTest, mean_dsc(site_models[i], local_tests[i], threshold),
                        local_tests[i].size()});
  }
  rep.aggregated_dsc = aggregate_dsc(rep.dscs(EvalSplit::LocalTest), rep.local_weights);

  if (!held_out.empty()) {
    const Dataset pooled = concat(held_out);
    for (std::size_t i = 0; i < local_tests.size(); ++i) {
      rep.rows.push_back({local_tests[i].site_id, EvalSplit::OutOfSample, mean_dsc(site_models[i], pooled, threshold),
                          pooled.size()});
    }
    rep.out_of_sample_weights = rep.local_weights;
    rep.aggregated_out_of_sample = aggregate_dsc(rep.dscs(EvalSplit::OutOfSample), rep.out_of_sample_weights);
  }
  return rep;
}

EvalReport evaluate_global(std::string method, const Predictor& model, std::span<const Dataset> local_tests,
                           std::span<const Dataset> held_out, std::span<const double> weights, double threshold) {
  check_eval_inputs(local_tests, weights);
  EvalReport rep;
  rep.method = std::move(method);
  rep.local_weights.assign(weights.begin(), weights.end());
  for (const Dataset& d : local_tests)
    rep.rows.push_back({d.site_id, EvalSplit::LocalTest, mean_dsc(model, d, threshold), d.size()});
  rep.aggregated_dsc = aggregate_dsc(rep.dscs(EvalSplit::LocalTest), rep.local_weights);

  if (!held_out.empty()) {
    for (const Dataset& d : held_out) {
      rep.rows.push_back({d.site_id, EvalSplit::OutOfSample, mean_dsc(model, d, threshold), d.size()});
      rep.out_of_sample_weights.push_back(static_cast<double>(d.size()));
    }
    rep.aggregated_out_of_sample = aggregate_dsc(rep.dscs(EvalSplit::OutOfSample), rep.out_of_sample_weights);
  }
  return rep;
}

}  // namespace gml
