#include "gml/baselines.hpp"

#include "streams.hpp"

namespace gml {

ModelWeights fedavg_aggregate(std::span<const ModelWeights> client_models, std::span<const double> alphas) {
  if (client_models.empty()) throw Error(ErrorCode::NoSites, "no client models to aggregate");
  if (client_models.size() != alphas.size())
    throw Error(ErrorCode::ShapeMismatch, "models and alphas differ in length");
  const ModelWeights& anchor = client_models.front();
  double total = 0.0;
  for (std::size_t i = 0; i < client_models.size(); ++i) {
    if (client_models[i].arch != anchor.arch || client_models[i].params.size() != anchor.params.size())
      throw Error(ErrorCode::IncompatibleModels, "client " + std::to_string(i) + " architecture differs");
    if (!(alphas[i] > 0.0)) throw Error(ErrorCode::InvalidSpec, "alphas must be positive");
    total += alphas[i];
  }

  ModelWeights out = anchor;
  for (std::size_t i = 1; i < client_models.size(); ++i) {
    const double w = alphas[i] / total;
    const auto& p = client_models[i].params;
    for (std::size_t k = 0; k < out.params.size(); ++k) out.params[k] += w * (p[k] - anchor.params[k]);
  }
  return out;
}

FedAvgResult run_fedavg(std::vector<SiteState> sites, const Schedule& sched, const TrainingOptions& opts) {
  sched.validate();
  if (sites.empty()) throw Error(ErrorCode::NoSites, "no clients");
  if (sched.warmup_rounds >= sched.total_rounds)
    throw Error(ErrorCode::InvalidSpec, "FedAvg needs at least one aggregation round");

  Rng init_rng = rng_derive(opts.seed, streams::init_global());
  FedRoundState state{init_weights(opts.arch, init_rng), 0, {}};
  for (auto& s : sites) {
    s.model = state.global_model;
    s.opt = make_opt_state(opts.optimizer, s.model.params.size());
    state.client_alphas.push_back(static_cast<double>(s.alpha));
  }
  const std::uint64_t payload = checkpoint_size(opts.arch);

  FedAvgResult res;
  std::vector<ModelWeights> uploads(sites.size());
  for (int round = 1; round <= sched.total_rounds; ++round) {
    state.round = round;
    const bool warmup = round <= sched.warmup_rounds;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      SiteState& site = sites[i];
      for (int e = 0; e < sched.local_epochs_per_round; ++e) {
        Rng rng = rng_derive(opts.seed, streams::local_epoch(site.site_id, round, e));
        train_local_epoch(site.model, site.opt, site.train, opts.loss, rng);
      }
      res.log.append(round, warmup ? EventKind::Warmup : EventKind::LocalEpoch, static_cast<int>(i));
    }
    if (warmup) continue;

    for (std::size_t i = 0; i < sites.size(); ++i) {
      uploads[i] = checkpoint_read(checkpoint_write(sites[i].model));
      res.log.append(round, EventKind::Upload, static_cast<int>(i), std::nullopt, payload, 1);
    }
    state.global_model = fedavg_aggregate(uploads, state.client_alphas);
    const auto bytes = checkpoint_write(state.global_model);
    for (std::size_t i = 0; i < sites.size(); ++i) {
      sites[i].model = checkpoint_read(bytes);
      res.log.append(round, EventKind::Download, std::nullopt, static_cast<int>(i), payload, 1);
    }
  }
  res.global_model = std::move(state.global_model);
  res.clients = std::move(sites);
  return res;
}

ModelWeights run_pooled(std::span<const Dataset> train_sets, const Schedule& sched, const TrainingOptions& opts,
                        std::string_view stream_id) {
  sched.validate();
  const Dataset pooled = concat(train_sets);
  if (pooled.cases.empty()) throw Error(ErrorCode::NoData, "pooled training set is empty");

  Rng init_rng = rng_derive(opts.seed, streams::init_site(stream_id));
  ModelWeights w = init_weights(opts.arch, init_rng);
  OptState opt = make_opt_state(opts.optimizer, w.params.size());
  for (int round = 1; round <= sched.total_rounds; ++round) {
    for (int e = 0; e < sched.local_epochs_per_round; ++e) {
      Rng rng = rng_derive(opts.seed, streams::local_epoch(stream_id, round, e));
      train_local_epoch(w, opt, pooled, opts.loss, rng);
    }
  }
  return w;
}

GmlResult run_individual(std::vector<SiteState> sites, const Schedule& sched, const TrainingOptions& opts) {
  Schedule local = sched;
  local.warmup_rounds = local.total_rounds;
  return run_gml(std::move(sites), local, opts);
}

}  // namespace gml
