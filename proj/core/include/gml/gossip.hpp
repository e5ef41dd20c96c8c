#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gml/events.hpp"
#include "gml/losses.hpp"
#include "gml/segmodel.hpp"
#include "gml/synthdata.hpp"

namespace gml {

enum class GossipMode {
  Single,     // one categorical sender per round
  Bernoulli,  // every site draws S_i ~ B(p_i) independently
};

struct Schedule {
  int total_rounds = 60;
  int warmup_rounds = 20;
  int local_epochs_per_round = 1;
  int mutual_epochs = 1;
  GossipMode mode = GossipMode::Single;

  /// Engine-level check: warmup_rounds <= total_rounds (equality means no
  /// gossip at all). Throws InvalidSpec.
  void validate() const;
  int post_warmup_rounds() const noexcept { return total_rounds - warmup_rounds; }
};

/// Everything a trainer needs besides data and schedule. All randomness is
/// derived from `seed` through labelled streams.
struct TrainingOptions {
  ArchSpec arch;
  OptimizerConfig optimizer;
  LossOptions loss;
  std::uint64_t seed = 0;
};

struct SiteState {
  std::string site_id;
  Dataset train;
  Dataset val;
  std::size_t alpha = 0;  // number of training cases
  ModelWeights model;
  OptState opt;
  double activation_prob = 0.0;
  bool paused = false;
};

/// Builds participants with per-site initial weights drawn from stream
/// "init/site/{id}" and activation probabilities proportional to alpha.
std::vector<SiteState> make_sites(std::span<const DatasetSplit> splits, const TrainingOptions& opts);

/// p_i = alpha_i / sum_j alpha_j. Throws NoSites on an empty list, InvalidSpec
/// on alpha < 1.
std::vector<double> activation_probabilities(std::span<const double> alphas);

struct Exchange {
  int sender = 0;
  int receiver = 0;
  friend bool operator==(const Exchange&, const Exchange&) = default;
};

/// Single mode returns exactly one exchange; Bernoulli mode returns one per
/// activated site, ordered by sender index. Receivers are uniform over the
/// other N-1 sites. Throws NoSites with fewer than 2 sites.
std::vector<Exchange> sample_exchange(std::span<const double> probs, GossipMode mode, Rng& rng);

/// One optimizer step per training case on plain Jaccard distance, in an order
/// shuffled by `rng`. Returns the mean loss seen during the epoch.
double train_local_epoch(ModelWeights& w, OptState& opt, const Dataset& data, const LossOptions& loss, Rng& rng);

/// Mean Jaccard distance (no update).
double mean_jaccard(const ModelWeights& w, const Dataset& data, const LossOptions& loss);
/// Mean receiver objective JD(P_r) + rKLD(P_r, P_s) with `peer` fixed.
double mean_receiver_loss(const ModelWeights& own, const ModelWeights& peer, const Dataset& data,
                          const LossOptions& loss);

struct MutualGradients {
  Gradient receiver;  // from the receiver objective, w.r.t. W_r
  Gradient sender;    // from the sender objective, w.r.t. the W_s copy
  double receiver_loss = 0.0;
  double sender_loss = 0.0;
};

/// Both models predict on the same case; each gradient flows only into its own
/// model (the peer prediction is a constant target).
MutualGradients mutual_gradients(const ModelWeights& w_r, const ModelWeights& w_s, const Case& c,
                                 const LossOptions& loss);

struct ExchangeContext {
  int round = 0;
  int sender = 0;
  int receiver = 0;
  std::uint64_t seed = 0;
  LossOptions loss;
};

struct ExchangeResult {
  SiteState receiver;
  std::vector<GossipEvent> events;  // seq left at 0; EventLog::append assigns it
};

/// Regionalized mutual learning at the receiver. `incoming` is co-trained with
/// a fresh optimizer state and discarded afterwards. Throws IncompatibleModels.
ExchangeResult mutual_learning_exchange(SiteState receiver, const ModelWeights& incoming, const Schedule& sched,
                                        const ExchangeContext& ctx);

struct GmlResult {
  std::vector<SiteState> sites;
  EventLog log;
};

/// Warm-up rounds train locally only; every later round trains locally, then
/// ships serialized models from sampled senders to receivers for mutual
/// learning. Deterministic for a given TrainingOptions::seed.
GmlResult run_gml(std::vector<SiteState> sites, const Schedule& sched, const TrainingOptions& opts);

}  // namespace gml
