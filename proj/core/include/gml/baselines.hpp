#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "gml/events.hpp"
#include "gml/gossip.hpp"

namespace gml {

/// Sample-size weighted parameter average, sum_i (alpha_i / sum_j alpha_j) * params_i.
/// Evaluated as params_0 + sum_i w_i (params_i - params_0) so identical clients
/// aggregate to themselves bit for bit. Throws IncompatibleModels.
ModelWeights fedavg_aggregate(std::span<const ModelWeights> client_models, std::span<const double> alphas);

struct FedRoundState {
  ModelWeights global_model;
  int round = 0;
  std::vector<double> client_alphas;
};

struct FedAvgResult {
  ModelWeights global_model;
  std::vector<SiteState> clients;
  EventLog log;
};

/// Clients start from one shared initialization (stream "init/global"). Warm-up
/// rounds train locally without aggregation; every later round trains locally,
/// uploads N models, aggregates and downloads N copies of the global model.
/// Requires warmup_rounds < total_rounds.
FedAvgResult run_fedavg(std::vector<SiteState> sites, const Schedule& sched, const TrainingOptions& opts);

/// One model trained for total_rounds epochs on the union of `train_sets`,
/// reshuffled every epoch. `stream_id` names the init/shuffle streams; passing a
/// site's id reproduces that site's individual training on its own data.
ModelWeights run_pooled(std::span<const Dataset> train_sets, const Schedule& sched, const TrainingOptions& opts,
                        std::string_view stream_id = "pooled");

/// Independent local training; the same code path as run_gml with gossip
/// disabled (warmup_rounds = total_rounds).
GmlResult run_individual(std::vector<SiteState> sites, const Schedule& sched, const TrainingOptions& opts);

}  // namespace gml
