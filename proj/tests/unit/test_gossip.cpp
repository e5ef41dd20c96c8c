#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "gml/baselines.hpp"
#include "gml/error.hpp"
#include "gml/gossip.hpp"
#include "support.hpp"

using namespace gml;

namespace {

std::vector<DatasetSplit> three_sites(std::uint64_t seed, std::int64_t extent = 12) {
  std::vector<DatasetSplit> out;
  const int sizes[] = {8, 12, 16};
  for (int i = 0; i < 3; ++i) {
    const std::string id = "s" + std::to_string(i);
    Rng rng = rng_derive(seed, "split/site/" + id);
    out.push_back(split_dataset(gml::test::small_site(id, sizes[i], seed, extent), {}, rng));
  }
  return out;
}

TrainingOptions options(std::uint64_t seed) {
  TrainingOptions o;
  o.arch.hidden_channels = 4;
  o.optimizer.learning_rate = 3e-3;
  o.seed = seed;
  return o;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Activation, Probabilities) {
  const auto p = activation_probabilities(std::vector<double>{11, 39, 51});
  EXPECT_NEAR(p[0], 0.1089, 1e-4);
  EXPECT_NEAR(p[1], 0.3861, 1e-4);
  EXPECT_NEAR(p[2], 0.5050, 1e-4);
  EXPECT_EQ(activation_probabilities(std::vector<double>{5, 5}), (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(activation_probabilities(std::vector<double>{7}), (std::vector<double>{1.0}));
  EXPECT_EQ(code_of([] { activation_probabilities(std::vector<double>{}); }), ErrorCode::NoSites);
  EXPECT_EQ(code_of([] { activation_probabilities(std::vector<double>{3, 0}); }), ErrorCode::InvalidSpec);
}

TEST(SampleExchange, TwoSitesOnlyCandidate) {
  Rng rng = rng_derive(1, "x");
  const std::vector<double> p{1.0, 0.0};
  for (int i = 0; i < 20; ++i)
    EXPECT_EQ(sample_exchange(p, GossipMode::Single, rng), (std::vector<Exchange>{{0, 1}}));
}

TEST(SampleExchange, DegenerateCategorical) {
  Rng rng = rng_derive(2, "x");
  const std::vector<double> p{1.0, 0.0, 0.0};
  std::set<int> receivers;
  for (int i = 0; i < 200; ++i) {
    const auto ex = sample_exchange(p, GossipMode::Single, rng);
    ASSERT_EQ(ex.size(), 1u);
    EXPECT_EQ(ex[0].sender, 0);
    receivers.insert(ex[0].receiver);
  }
  EXPECT_EQ(receivers, (std::set<int>{1, 2}));
}

TEST(SampleExchange, SingleModeFrequencies) {
  Rng rng = rng_derive(3, "x");
  const std::vector<double> p{0.1089, 0.3861, 0.5050};
  std::vector<int> senders(3, 0);
  std::vector<std::vector<int>> recv(3, std::vector<int>(3, 0));
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto ex = sample_exchange(p, GossipMode::Single, rng).front();
    ASSERT_NE(ex.sender, ex.receiver);
    senders[ex.sender]++;
    recv[ex.sender][ex.receiver]++;
  }
  for (int s = 0; s < 3; ++s) {
    EXPECT_NEAR(senders[s] / static_cast<double>(n), p[s], 0.01);
    const int a = recv[s][(s + 1) % 3], b = recv[s][(s + 2) % 3];
    EXPECT_NEAR(a / static_cast<double>(a + b), 0.5, 0.03);
  }
}

TEST(SampleExchange, BernoulliMode) {
  Rng rng = rng_derive(4, "x");
  const std::vector<double> p{0.2, 0.3, 0.5};
  double total = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto ex = sample_exchange(p, GossipMode::Bernoulli, rng);
    for (std::size_t k = 0; k < ex.size(); ++k) {
      EXPECT_NE(ex[k].sender, ex[k].receiver);
      if (k) EXPECT_LT(ex[k - 1].sender, ex[k].sender);
    }
    total += static_cast<double>(ex.size());
  }
  // variance of a sum of independent Bernoullis
  const double var = 0.2 * 0.8 + 0.3 * 0.7 + 0.5 * 0.5;
  EXPECT_NEAR(total / n, 1.0, 3 * std::sqrt(var / n));
}

TEST(SampleExchange, NeedsTwoSites) {
  Rng rng = rng_derive(5, "x");
  EXPECT_EQ(code_of([&] { sample_exchange(std::vector<double>{1.0}, GossipMode::Single, rng); }), ErrorCode::NoSites);
}

TEST(MakeSites, AlphaProbabilitiesAndDistinctInit) {
  const auto splits = three_sites(1);
  const auto sites = make_sites(splits, options(1));
  ASSERT_EQ(sites.size(), 3u);
  double total = 0.0;
  for (const auto& s : sites) total += static_cast<double>(s.alpha);
  for (const auto& s : sites) {
    EXPECT_EQ(s.alpha, s.train.size());
    EXPECT_DOUBLE_EQ(s.activation_prob, static_cast<double>(s.alpha) / total);
    EXPECT_FALSE(s.paused);
  }
  EXPECT_NE(sites[0].model, sites[1].model);
  EXPECT_EQ(make_sites(splits, options(1))[2].model, sites[2].model);
}

TEST(LocalEpoch, ReducesTrainingLoss) {
  auto sites = make_sites(three_sites(2), options(2));
  SiteState& s = sites[2];
  const double before = mean_jaccard(s.model, s.train, {});
  for (int e = 0; e < 15; ++e) {
    Rng rng = rng_derive(2, "epoch" + std::to_string(e));
    train_local_epoch(s.model, s.opt, s.train, {}, rng);
  }
  EXPECT_LT(mean_jaccard(s.model, s.train, {}), before);
}

TEST(MutualGradients, EachObjectiveFeedsOnlyItsOwnModel) {
  auto sites = make_sites(three_sites(3), options(3));
  const Case& c = sites[0].train.cases[0];
  const ModelWeights& wr = sites[0].model;
  const ModelWeights& ws = sites[1].model;
  const MutualGradients g = mutual_gradients(wr, ws, c, {});
  const Grid pr = forward(wr, c.image), ps = forward(ws, c.image);
  EXPECT_EQ(g.receiver, backward(wr, c.image, mutual_loss_receiver(pr, ps, c.mask).grad));
  EXPECT_EQ(g.sender, backward(ws, c.image, mutual_loss_sender(ps, pr, c.mask).grad));
  EXPECT_EQ(g.receiver_loss, mutual_loss_receiver(pr, ps, c.mask).value);
}

TEST(Exchange, ZeroLearningRateLeavesReceiverUnchanged) {
  TrainingOptions o = options(4);
  o.optimizer.learning_rate = 0.0;
  auto sites = make_sites(three_sites(4), o);
  const SiteState before = sites[0];
  Schedule sched;
  ExchangeResult r = mutual_learning_exchange(sites[0], sites[1].model, sched, {21, 1, 0, 4, {}});
  EXPECT_EQ(r.receiver.model, before.model);
  ASSERT_EQ(r.events.size(), 1u);
  EXPECT_EQ(r.events[0].kind, EventKind::MutualLearning);
  EXPECT_EQ(r.events[0].sender, 1);
  EXPECT_EQ(r.events[0].receiver, 0);

  ExchangeResult same = mutual_learning_exchange(sites[0], sites[0].model, sched, {21, 1, 0, 4, {}});
  EXPECT_EQ(same.receiver.model, before.model);
}

TEST(Exchange, IncompatibleIncoming) {
  auto sites = make_sites(three_sites(5), options(5));
  ArchSpec other = sites[0].model.arch;
  other.hidden_channels = 2;
  Rng rng = rng_derive(5, "other");
  EXPECT_EQ(code_of([&] { mutual_learning_exchange(sites[0], init_weights(other, rng), Schedule{}, {}); }),
            ErrorCode::IncompatibleModels);
}

TEST(Exchange, ReceiverObjectiveDecreases) {
  // Warm each site up, then run one exchange and compare the receiver's mean
  // objective against the fixed incoming model before and after.
  int improved = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TrainingOptions o = options(seed);
    Schedule warm{10, 10, 1, 1, GossipMode::Single};
    GmlResult res = run_individual(make_sites(three_sites(seed), o), warm, o);
    std::vector<double> probs;
    for (const auto& s : res.sites) probs.push_back(s.activation_prob);
    Rng proto = rng_derive(seed, "test/protocol");
    const Exchange ex = sample_exchange(probs, GossipMode::Single, proto).front();
    const ModelWeights incoming = checkpoint_read(checkpoint_write(res.sites[ex.sender].model));
    const SiteState& recv = res.sites[ex.receiver];
    const double before = mean_receiver_loss(recv.model, incoming, recv.train, o.loss);
    ExchangeResult r = mutual_learning_exchange(recv, incoming, warm, {11, ex.sender, ex.receiver, seed, o.loss});
    const double after = mean_receiver_loss(r.receiver.model, incoming, recv.train, o.loss);
    improved += after <= before;
  }
  EXPECT_GE(improved, 8);
}

TEST(RunGml, WarmupOnlyHasNoTransfersAndMatchesIndividual) {
  const TrainingOptions o = options(6);
  Schedule s{6, 6, 1, 1, GossipMode::Single};
  const GmlResult g = run_gml(make_sites(three_sites(6), o), s, o);
  EXPECT_EQ(g.log.count(EventKind::Transfer), 0u);
  EXPECT_EQ(g.log.count(EventKind::Warmup), 18u);
  const GmlResult ind = run_individual(make_sites(three_sites(6), o), Schedule{6, 2, 1, 1, GossipMode::Single}, o);
  ASSERT_EQ(ind.sites.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g.sites[i].model, ind.sites[i].model);
}

TEST(RunGml, SingleModeOneTransferPerRound) {
  const TrainingOptions o = options(7);
  Schedule s{104, 4, 1, 1, GossipMode::Single};
  const auto sites = make_sites(three_sites(7, 8), o);
  const GmlResult g = run_gml(sites, s, o);
  EXPECT_EQ(g.log.count(EventKind::Transfer), 100u);
  const auto ckpt = checkpoint_size(o.arch);
  int last_round = 0;
  std::uint64_t last_seq = 0;
  for (const auto& ev : g.log.events()) {
    EXPECT_GE(ev.round, last_round);
    if (ev.seq) EXPECT_GT(ev.seq, last_seq);
    last_round = ev.round;
    last_seq = ev.seq;
    if (ev.kind == EventKind::Transfer) {
      EXPECT_EQ(ev.messages, 1u);
      EXPECT_EQ(ev.bytes, ckpt);
      EXPECT_NE(*ev.sender, *ev.receiver);
      EXPECT_GT(ev.round, 4);
    }
  }
  EXPECT_EQ(communication_totals(g.log), (CommunicationTotals{100, 100 * ckpt}));
}

TEST(RunGml, ExchangeEventSequence) {
  const TrainingOptions o = options(8);
  const GmlResult g = run_gml(make_sites(three_sites(8), o), Schedule{3, 1, 1, 1, GossipMode::Single}, o);
  std::vector<EventKind> round2;
  for (const auto& ev : g.log.events())
    if (ev.round == 2) round2.push_back(ev.kind);
  EXPECT_EQ(round2, (std::vector<EventKind>{EventKind::LocalEpoch, EventKind::LocalEpoch, EventKind::LocalEpoch,
                                            EventKind::Activation, EventKind::Transfer, EventKind::MutualLearning,
                                            EventKind::Resume}));
}

TEST(RunGml, SenderModelUntouchedByExchange) {
  // With no local epochs a round's only update is the exchange itself.
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const TrainingOptions o = options(seed);
    const auto sites = make_sites(three_sites(seed), o);
    const GmlResult g = run_gml(sites, Schedule{1, 0, 0, 1, GossipMode::Single}, o);
    const auto& evs = g.log.events();
    const auto t = *std::find_if(evs.begin(), evs.end(), [](const GossipEvent& e) { return e.kind == EventKind::Transfer; });
    for (int i = 0; i < 3; ++i) {
      if (i == *t.receiver)
        EXPECT_NE(g.sites[i].model, sites[i].model);
      else
        EXPECT_EQ(g.sites[i].model, sites[i].model);
      EXPECT_FALSE(g.sites[i].paused);
    }
  }
}

TEST(RunGml, BernoulliSendersShipPreRoundWeights) {
  const TrainingOptions o = options(9);
  const auto sites = make_sites(three_sites(9), o);
  Schedule s{1, 0, 0, 1, GossipMode::Bernoulli};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainingOptions os = o;
    os.seed = seed;
    const GmlResult g = run_gml(sites, s, os);
    std::set<int> receivers;
    for (const auto& ev : g.log.events())
      if (ev.kind == EventKind::Transfer) receivers.insert(*ev.receiver);
    for (int i = 0; i < 3; ++i)
      if (!receivers.contains(i)) EXPECT_EQ(g.sites[i].model, sites[i].model);
  }
}

TEST(RunGml, Deterministic) {
  const TrainingOptions o = options(10);
  Schedule s{8, 3, 1, 1, GossipMode::Single};
  const GmlResult a = run_gml(make_sites(three_sites(10), o), s, o);
  const GmlResult b = run_gml(make_sites(three_sites(10), o), s, o);
  EXPECT_EQ(event_log_digest(a.log), event_log_digest(b.log));
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(checkpoint_write(a.sites[i].model), checkpoint_write(b.sites[i].model));
}

TEST(RunGml, Errors) {
  const TrainingOptions o = options(11);
  auto sites = make_sites(three_sites(11), o);
  EXPECT_EQ(code_of([&] { run_gml(sites, Schedule{5, 6, 1, 1, GossipMode::Single}, o); }), ErrorCode::InvalidSpec);
  EXPECT_EQ(code_of([&] { run_gml({}, Schedule{}, o); }), ErrorCode::NoSites);
  sites.resize(1);
  EXPECT_EQ(code_of([&] { run_gml(sites, Schedule{5, 2, 1, 1, GossipMode::Single}, o); }), ErrorCode::NoSites);
}
