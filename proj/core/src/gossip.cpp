#include "gml/gossip.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "streams.hpp"

namespace gml {

void Schedule::validate() const {
  if (total_rounds < 1) throw Error(ErrorCode::InvalidSpec, "total_rounds must be >= 1");
  if (warmup_rounds < 0 || warmup_rounds > total_rounds)
    throw Error(ErrorCode::InvalidSpec, "warmup_rounds must be in [0, total_rounds]");
  if (local_epochs_per_round < 0) throw Error(ErrorCode::InvalidSpec, "local_epochs_per_round must be >= 0");
  if (mutual_epochs < 0) throw Error(ErrorCode::InvalidSpec, "mutual_epochs must be >= 0");
}

std::vector<double> activation_probabilities(std::span<const double> alphas) {
  if (alphas.empty()) throw Error(ErrorCode::NoSites, "no participants");
  double total = 0.0;
  for (double a : alphas) {
    if (!(a >= 1.0)) throw Error(ErrorCode::InvalidSpec, "every alpha must be >= 1");
    total += a;
  }
  std::vector<double> p(alphas.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = alphas[i] / total;
  return p;
}

std::vector<SiteState> make_sites(std::span<const DatasetSplit> splits, const TrainingOptions& opts) {
  std::vector<SiteState> sites;
  std::vector<double> alphas;
  for (const DatasetSplit& s : splits) {
    SiteState site;
    site.site_id = s.train.site_id;
    site.train = s.train;
    site.val = s.val;
    site.alpha = s.train.size();
    Rng rng = rng_derive(opts.seed, streams::init_site(site.site_id));
    site.model = init_weights(opts.arch, rng);
    site.opt = make_opt_state(opts.optimizer, site.model.params.size());
    alphas.push_back(static_cast<double>(site.alpha));
    sites.push_back(std::move(site));
  }
  const auto probs = activation_probabilities(alphas);
  for (std::size_t i = 0; i < sites.size(); ++i) sites[i].activation_prob = probs[i];
  return sites;
}

std::vector<Exchange> sample_exchange(std::span<const double> probs, GossipMode mode, Rng& rng) {
  const std::size_t n = probs.size();
  if (n < 2) throw Error(ErrorCode::NoSites, "gossip needs at least 2 sites");

  auto pick_receiver = [&](std::size_t sender) {
    const std::size_t j = rng.uniform_index(n - 1);
    return static_cast<int>(j < sender ? j : j + 1);
  };

  std::vector<Exchange> out;
  if (mode == GossipMode::Single) {
    const std::size_t s = rng.categorical(probs);
    out.push_back({static_cast<int>(s), pick_receiver(s)});
    return out;
  }
  // Draw all activations first so receiver draws cannot shift them.
  std::vector<bool> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = rng.bernoulli(probs[i]);
  for (std::size_t i = 0; i < n; ++i)
    if (active[i]) out.push_back({static_cast<int>(i), pick_receiver(i)});
  return out;
}

double train_local_epoch(ModelWeights& w, OptState& opt, const Dataset& data, const LossOptions& loss, Rng& rng) {
  if (data.cases.empty()) return 0.0;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);

  double total = 0.0;
  for (std::size_t idx : order) {
    const Case& c = data.cases[idx];
    std::span<const Grid> x(&c.image, 1);
    const ForwardTrace tr = forward_trace(w, x);
    const LossValue jd = jaccard_distance(tr.prob, c.mask, loss.jaccard_eps);
    total += jd.value;
    opt_step_inplace(w, backward(w, x, tr, jd.grad), opt);
  }
  return total / static_cast<double>(data.size());
}

double mean_jaccard(const ModelWeights& w, const Dataset& data, const LossOptions& loss) {
  if (data.cases.empty()) return 0.0;
  double total = 0.0;
  for (const Case& c : data.cases) total += jaccard_distance(forward(w, c.image), c.mask, loss.jaccard_eps).value;
  return total / static_cast<double>(data.size());
}

double mean_receiver_loss(const ModelWeights& own, const ModelWeights& peer, const Dataset& data,
                          const LossOptions& loss) {
  if (data.cases.empty()) return 0.0;
  double total = 0.0;
  for (const Case& c : data.cases)
    total += mutual_loss_receiver(forward(own, c.image), forward(peer, c.image), c.mask, loss).value;
  return total / static_cast<double>(data.size());
}

MutualGradients mutual_gradients(const ModelWeights& w_r, const ModelWeights& w_s, const Case& c,
                                 const LossOptions& loss) {
  std::span<const Grid> x(&c.image, 1);
  const ForwardTrace tr_r = forward_trace(w_r, x);
  const ForwardTrace tr_s = forward_trace(w_s, x);
  const LossValue lr = mutual_loss_receiver(tr_r.prob, tr_s.prob, c.mask, loss);
  const LossValue ls = mutual_loss_sender(tr_s.prob, tr_r.prob, c.mask, loss);
  return {backward(w_r, x, tr_r, lr.grad), backward(w_s, x, tr_s, ls.grad), lr.value, ls.value};
}

ExchangeResult mutual_learning_exchange(SiteState receiver, const ModelWeights& incoming, const Schedule& sched,
                                        const ExchangeContext& ctx) {
  if (incoming.arch != receiver.model.arch || incoming.params.size() != receiver.model.params.size()) {
    throw Error(ErrorCode::IncompatibleModels, "incoming model architecture differs from receiver '" +
                                                   receiver.site_id + "'");
  }
  ModelWeights peer = incoming;
  OptState peer_opt = make_opt_state(receiver.opt.config, peer.params.size());

  std::vector<std::size_t> order(receiver.train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < sched.mutual_epochs; ++epoch) {
    Rng rng = rng_derive(ctx.seed, streams::mutual(ctx.round, ctx.receiver, ctx.sender, epoch));
    rng.shuffle(order);
    for (std::size_t idx : order) {
      // Both objectives see predictions from the same pre-step weights.
      const MutualGradients g = mutual_gradients(receiver.model, peer, receiver.train.cases[idx], ctx.loss);
      opt_step_inplace(receiver.model, g.receiver, receiver.opt);
      opt_step_inplace(peer, g.sender, peer_opt);
    }
  }

  ExchangeResult out{std::move(receiver), {}};
  out.events.push_back({ctx.round, 0, EventKind::MutualLearning, ctx.sender, ctx.receiver, 0, 0});
  return out;
}

GmlResult run_gml(std::vector<SiteState> sites, const Schedule& sched, const TrainingOptions& opts) {
  sched.validate();
  if (sites.empty()) throw Error(ErrorCode::NoSites, "no participants");
  if (sched.post_warmup_rounds() > 0 && sites.size() < 2) throw Error(ErrorCode::NoSites, "gossip needs at least 2 sites");

  std::vector<double> probs;
  for (const auto& s : sites) probs.push_back(s.activation_prob);

  GmlResult res;
  for (int round = 1; round <= sched.total_rounds; ++round) {
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

    Rng proto = rng_derive(opts.seed, streams::protocol(round));
    const auto exchanges = sample_exchange(probs, sched.mode, proto);

    // Senders ship the weights they held before any exchange this round.
    std::map<int, std::vector<std::uint8_t>> payloads;
    for (const Exchange& ex : exchanges)
      if (!payloads.contains(ex.sender)) payloads[ex.sender] = checkpoint_write(sites[ex.sender].model);

    for (const Exchange& ex : exchanges) {
      SiteState& sender = sites[ex.sender];
      const auto& payload = payloads.at(ex.sender);
      res.log.append(round, EventKind::Activation, ex.sender, ex.receiver);
      sender.paused = true;
      res.log.append(round, EventKind::Transfer, ex.sender, ex.receiver, payload.size(), 1);

      const ModelWeights incoming = checkpoint_read(payload);
      ExchangeContext ctx{round, ex.sender, ex.receiver, opts.seed, opts.loss};
      ExchangeResult r = mutual_learning_exchange(std::move(sites[ex.receiver]), incoming, sched, ctx);
      sites[ex.receiver] = std::move(r.receiver);
      for (auto& ev : r.events) res.log.append(ev);

      sites[ex.sender].paused = false;
      res.log.append(round, EventKind::Resume, ex.sender, ex.receiver);
    }
  }
  res.sites = std::move(sites);
  return res;
}

}  // namespace gml
