#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gml/error.hpp"
#include "gml/experiment.hpp"

using namespace gml;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig c = config_parse(R"({
    "image_extent": 12,
    "sites": [
      {"site_id": "a", "n_cases": 6, "blob_radius_range": [1.5, 3]},
      {"site_id": "b", "n_cases": 8, "blob_radius_range": [2, 3.5]},
      {"site_id": "c", "n_cases": 10, "blob_radius_range": [2, 4]}],
    "held_out_sites": [{"site_id": "h", "n_cases": 3, "blob_radius_range": [2, 3]}],
    "model": {"hidden_channels": 3},
    "schedule": {"total_rounds": 6, "warmup_rounds": 2}})");
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "gml_unit_exp" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

}  // namespace

TEST(Method, Names) {
  for (auto m : {Method::Gml, Method::FedAvg, Method::Pooled, Method::Individual})
    EXPECT_EQ(method_from_string(to_string(m)), m);
  EXPECT_THROW(method_from_string("swarm"), Error);
}

TEST(GenerateData, SplitsAndWeights) {
  const ExperimentConfig c = tiny_config();
  const ExperimentData d = generate_data(c);
  ASSERT_EQ(d.participants.size(), 3u);
  EXPECT_EQ(d.participants[0].train.size(), 4u);
  EXPECT_EQ(d.participants[0].test.size(), 1u);
  EXPECT_EQ(d.held_out.at(0).size(), 3u);
  EXPECT_EQ(aggregation_weights(c, d), (std::vector<double>{1, 1, 2}));
  ExperimentConfig explicit_w = c;
  explicit_w.eval.aggregation_weights = std::vector<double>{4, 11, 14};
  EXPECT_EQ(aggregation_weights(explicit_w, d), (std::vector<double>{4, 11, 14}));
}

TEST(RunMethod, ReportsAndCommunication) {
  const ExperimentConfig c = tiny_config();
  const ExperimentData d = generate_data(c);
  const RunOutcome g = run_method(c, Method::Gml, d);
  ASSERT_EQ(g.reports.size(), 2u);
  EXPECT_EQ(g.reports[0].method, "gml");
  EXPECT_TRUE(g.reports[0].site_specific);
  EXPECT_EQ(g.reports[1].method, "gml_ensemble");
  EXPECT_EQ(g.comms.messages, 4u);
  EXPECT_EQ(g.models.size(), 3u);

  const RunOutcome f = run_method(c, Method::FedAvg, d);
  EXPECT_EQ(f.comms.messages, 24u);
  ASSERT_EQ(f.models.size(), 1u);
  EXPECT_EQ(f.models[0].first, "global");

  const RunOutcome i = run_method(c, Method::Individual, d);
  EXPECT_EQ(i.comms.messages, 0u);
  EXPECT_EQ(i.log.count(EventKind::Transfer) + i.log.count(EventKind::Upload), 0u);
  const RunOutcome p = run_method(c, Method::Pooled, d);
  EXPECT_EQ(p.comms.messages, 0u);
}

TEST(RunMethod, FedAvgDefaultScheduleMessageCount) {
  ExperimentConfig c = tiny_config();
  c.schedule.total_rounds = 60;
  c.schedule.warmup_rounds = 20;
  EXPECT_EQ(run_method(c, Method::FedAvg).comms.messages, 240u);
}

TEST(CmdRun, WritesLayoutAndIsDeterministic) {
  const ExperimentConfig c = tiny_config();
  const fs::path a = fresh_dir("det_a"), b = fresh_dir("det_b");
  const fs::path da = cmd_run(c, Method::Gml, a), db = cmd_run(c, Method::Gml, b);
  EXPECT_EQ(da, a / "gml");
  for (const char* f : {"config.json", "events.jsonl", "report.csv", "report.json", "models/a.gmlw",
                        "models/c.gmlw", "data/a_train.gmld", "data/b_test.gmld", "data/h.gmld"}) {
    ASSERT_TRUE(fs::exists(da / f)) << f;
    EXPECT_EQ(slurp(da / f), slurp(db / f)) << f;
  }
  EXPECT_EQ(config_to_json(config_load(da / "config.json")), config_to_json(c));
  const std::string csv = slurp(da / "report.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "method,site,split,n_cases,mean_dsc");
  EXPECT_EQ(dataset_read(da / "data/h.gmld").size(), 3u);
}

TEST(CmdRun, FailureRemovesMethodDir) {
  ExperimentConfig c = tiny_config();
  c.schedule.warmup_rounds = c.schedule.total_rounds;  // rejected by validation
  const fs::path out = fresh_dir("fail");
  EXPECT_THROW(cmd_run(c, Method::Gml, out), Error);
  EXPECT_FALSE(fs::exists(out / "gml"));
}

TEST(CmdGenData, WritesEveryPartition) {
  const fs::path out = fresh_dir("gen");
  const auto files = cmd_gen_data(tiny_config(), out);
  EXPECT_EQ(files.size(), 10u);
  for (const auto& f : files) EXPECT_TRUE(fs::exists(f));
}

TEST(Compare, TablesAndRatio) {
  const ExperimentConfig c = tiny_config();
  const fs::path out = fresh_dir("cmp");
  for (auto m : {Method::Gml, Method::FedAvg, Method::Pooled, Method::Individual}) cmd_run(c, m, out);
  const std::vector<fs::path> dirs{out};
  const std::string table = cmd_compare(dirs);
  for (const char* block : {"# site_specific_local_test", "# site_models_local_vs_out_of_sample", "# global_models",
                            "# communication", "# gml_fedavg_message_ratio"})
    EXPECT_NE(table.find(block), std::string::npos) << block;
  EXPECT_NE(table.find("4,24,0.1667"), std::string::npos) << table;

  // (gml + individual) x 3 sites x 2 splits
  const auto start = table.find("# site_models_local_vs_out_of_sample");
  const auto block = table.substr(start, table.find("\n\n", start) - start);
  EXPECT_EQ(std::count(block.begin(), block.end(), '\n'), 2 + 12 - 1);

  const auto runs = load_runs(out);
  EXPECT_EQ(runs.size(), 4u);
}

TEST(Compare, SelfComparisonHasZeroDeltas) {
  const fs::path out = fresh_dir("self");
  const fs::path d = cmd_run(tiny_config(), Method::Individual, out);
  const std::vector<fs::path> dirs{d, d};
  const std::string table = cmd_compare(dirs);
  std::istringstream lines(table);
  std::string line;
  bool in_delta_block = false;
  int checked = 0;
  while (std::getline(lines, line)) {
    if (line.rfind("method,aggregated", 0) == 0) {
      in_delta_block = true;
      continue;
    }
    if (line.empty() || line[0] == '#') {
      in_delta_block = false;
      continue;
    }
    if (!in_delta_block) continue;
    std::istringstream cells(line);
    std::vector<std::string> v;
    for (std::string cell; std::getline(cells, cell, ',');) v.push_back(cell);
    for (std::size_t k = v.size() - (v.size() == 3 ? 1 : 2); k < v.size(); ++k) {
      EXPECT_EQ(std::stod(v[k]), 0.0) << line;
      ++checked;
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Compare, MissingArtifacts) {
  const fs::path empty = fresh_dir("empty");
  const std::vector<fs::path> one{empty};
  try {
    cmd_compare(one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingArtifact);
  }
  const fs::path single = fresh_dir("single");
  const std::vector<fs::path> just_one{cmd_run(tiny_config(), Method::Pooled, single)};
  try {
    cmd_compare(just_one);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingArtifact);
  }
}
