#include "gml/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "gml/baselines.hpp"
#include "gml/gossip.hpp"
#include "streams.hpp"

namespace gml {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(Method m) noexcept {
  switch (m) {
    case Method::Gml: return "gml";
    case Method::FedAvg: return "fedavg";
    case Method::Pooled: return "pooled";
    case Method::Individual: return "individual";
  }
  return "unknown";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::Gml, Method::FedAvg, Method::Pooled, Method::Individual})
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::BadConfig, "unknown method '" + std::string(name) + "'");
}

std::vector<Dataset> ExperimentData::local_tests() const {
  std::vector<Dataset> out;
  for (const auto& p : participants) out.push_back(p.test);
  return out;
}

std::vector<Dataset> ExperimentData::train_sets() const {
  std::vector<Dataset> out;
  for (const auto& p : participants) out.push_back(p.train);
  return out;
}

ExperimentData generate_data(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentData data;
  for (const auto& p : cfg.sites) {
    Rng gen = rng_derive(cfg.seed, streams::site_data(p.gen.site_id));
    const Dataset all = generate_site(p.gen, cfg.image_extent, gen);
    Rng split = rng_derive(cfg.seed, streams::split(p.gen.site_id));
    data.participants.push_back(split_dataset(all, p.split, split));
  }
  for (const auto& s : cfg.held_out_sites) {
    Rng gen = rng_derive(cfg.seed, streams::heldout_data(s.site_id));
    data.held_out.push_back(generate_site(s, cfg.image_extent, gen));
  }
  return data;
}

std::vector<double> aggregation_weights(const ExperimentConfig& cfg, const ExperimentData& data) {
  if (cfg.eval.aggregation_weights) return *cfg.eval.aggregation_weights;
  std::vector<double> w;
  for (const auto& p : data.participants) w.push_back(static_cast<double>(p.test.size()));
  return w;
}

RunOutcome run_method(const ExperimentConfig& cfg, Method method, const ExperimentData& data) {
  cfg.validate();
  const TrainingOptions opts = cfg.training_options();
  const auto tests = data.local_tests();
  const auto weights = aggregation_weights(cfg, data);
  const double thr = cfg.eval.threshold;

  RunOutcome out;
  out.method = method;
  out.post_warmup_rounds = cfg.schedule.post_warmup_rounds();

  auto site_model_reports = [&](const std::vector<SiteState>& sites, const std::string& name) {
    std::vector<Predictor> preds;
    std::vector<ModelWeights> models;
    for (const auto& s : sites) {
      preds.push_back(model_predictor(s.model));
      models.push_back(s.model);
      out.models.emplace_back(s.site_id, s.model);
    }
    out.reports.push_back(evaluate_site_models(name, preds, tests, data.held_out, weights, thr));
    out.reports.push_back(
        evaluate_global(name + "_ensemble", ensemble_predictor(std::move(models)), tests, data.held_out, weights, thr));
  };

  switch (method) {
    case Method::Gml: {
      GmlResult r = run_gml(make_sites(data.participants, opts), cfg.schedule, opts);
      out.log = std::move(r.log);
      site_model_reports(r.sites, "gml");
      break;
    }
    case Method::Individual: {
      GmlResult r = run_individual(make_sites(data.participants, opts), cfg.schedule, opts);
      out.log = std::move(r.log);
      out.post_warmup_rounds = 0;
      site_model_reports(r.sites, "individual");
      break;
    }
    case Method::FedAvg: {
      FedAvgResult r = run_fedavg(make_sites(data.participants, opts), cfg.schedule, opts);
      out.log = std::move(r.log);
      out.models.emplace_back("global", r.global_model);
      out.reports.push_back(evaluate_global("fedavg", model_predictor(r.global_model), tests, data.held_out, weights, thr));
      break;
    }
    case Method::Pooled: {
      const auto train = data.train_sets();
      ModelWeights w = run_pooled(train, cfg.schedule, opts);
      out.post_warmup_rounds = 0;
      out.models.emplace_back("global", w);
      out.reports.push_back(evaluate_global("pooled", model_predictor(w), tests, data.held_out, weights, thr));
      break;
    }
  }
  out.comms = communication_totals(out.log);
  return out;
}

RunOutcome run_method(const ExperimentConfig& cfg, Method method) { return run_method(cfg, method, generate_data(cfg)); }

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingArtifact, "missing " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<fs::path> write_data(const ExperimentData& data, const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto put = [&](const Dataset& d, const std::string& name) {
    written.push_back(dir / (name + ".gmld"));
    dataset_write(d, written.back());
  };
  for (const auto& p : data.participants) {
    put(p.train, p.train.site_id + "_train");
    put(p.val, p.val.site_id + "_val");
    put(p.test, p.test.site_id + "_test");
  }
  for (const auto& h : data.held_out) put(h, h.site_id);
  return written;
}

std::string fmt_double(double v, const char* spec = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["method"] = r.method;
  j["kind"] = r.site_specific ? "site_models" : "global";
  j["rows"] = ordered_json::array();
  for (const auto& row : r.rows) {
    j["rows"].push_back({{"site", row.site},
                         {"split", to_string(row.split)},
                         {"n_cases", row.n_cases},
                         {"mean_dsc", row.mean_dsc}});
  }
  j["local_weights"] = r.local_weights;
  j["out_of_sample_weights"] = r.out_of_sample_weights;
  j["aggregated_dsc"] = r.aggregated_dsc;
  j["aggregated_out_of_sample"] =
      r.out_of_sample_weights.empty() ? ordered_json(nullptr) : ordered_json(r.aggregated_out_of_sample);
  return j;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.method = j.at("method").get<std::string>();
  r.site_specific = j.at("kind").get<std::string>() == "site_models";
  for (const auto& row : j.at("rows")) {
    r.rows.push_back({row.at("site").get<std::string>(), eval_split_from_string(row.at("split").get<std::string>()),
                      row.at("mean_dsc").get<double>(), row.at("n_cases").get<std::size_t>()});
  }
  r.local_weights = j.at("local_weights").get<std::vector<double>>();
  r.out_of_sample_weights = j.at("out_of_sample_weights").get<std::vector<double>>();
  r.aggregated_dsc = j.at("aggregated_dsc").get<double>();
  if (!j.at("aggregated_out_of_sample").is_null()) r.aggregated_out_of_sample = j.at("aggregated_out_of_sample").get<double>();
  return r;
}

}  // namespace

std::vector<fs::path> cmd_gen_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
  return write_data(generate_data(cfg), out_dir / "data");
}

std::string report_csv(std::span<const EvalReport> reports) {
  std::string out = "method,site,split,n_cases,mean_dsc\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out += r.method + "," + row.site + "," + std::string(to_string(row.split)) + "," + std::to_string(row.n_cases) +
             "," + fmt_double(row.mean_dsc, "%.10f") + "\n";
    }
  }
  return out;
}

std::string report_json(const RunOutcome& o, const ExperimentConfig& cfg) {
  ordered_json j;
  j["method"] = to_string(o.method);
  j["seed"] = cfg.seed;
  j["post_warmup_rounds"] = o.post_warmup_rounds;
  j["communication"] = {{"messages", o.comms.messages}, {"bytes", o.comms.bytes}};
  j["event_log_digest"] = event_log_digest(o.log);
  j["models"] = ordered_json::array();
  for (const auto& [name, w] : o.models) j["models"].push_back("models/" + name + ".gmlw");
  j["reports"] = ordered_json::array();
  for (const auto& r : o.reports) j["reports"].push_back(report_to_json(r));
  return j.dump(2) + "\n";
}

fs::path cmd_run(const ExperimentConfig& cfg, Method method, const fs::path& out_dir) {
  cfg.validate();
  const fs::path dir = out_dir / std::string(to_string(method));
  fs::remove_all(dir);
  try {
    fs::create_directories(dir / "models");
    write_text(dir / "config.json", config_to_json(cfg));
    const ExperimentData data = generate_data(cfg);
    write_data(data, dir / "data");

    const RunOutcome o = run_method(cfg, method, data);
    for (const auto& [name, w] : o.models) checkpoint_save(dir / "models" / (name + ".gmlw"), w);
    write_jsonl(o.log, dir / "events.jsonl");
    write_text(dir / "report.csv", report_csv(o.reports));
    write_text(dir / "report.json", report_json(o, cfg));
  } catch (...) {
    std::error_code ec;
    fs::remove_all(dir, ec);
    throw;
  }
  return dir;
}

// ---------------------------------------------------------------------------
// compare

namespace {

RunSummary load_one(const fs::path& dir) {
  RunSummary s;
  s.dir = dir;
  try {
    const json j = json::parse(read_text(dir / "report.json"));
    s.method = j.at("method").get<std::string>();
    s.post_warmup_rounds = j.at("post_warmup_rounds").get<int>();
    for (const auto& r : j.at("reports")) s.reports.push_back(report_from_json(r));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MissingArtifact, "malformed " + (dir / "report.json").string() + ": " + e.what());
  }
  if (!fs::exists(dir / "events.jsonl")) throw Error(ErrorCode::MissingArtifact, "missing " + (dir / "events.jsonl").string());
  s.comms = communication_totals(read_jsonl(dir / "events.jsonl"));
  return s;
}

const EvalReport* find_report(const RunSummary& s, bool site_specific) {
  for (const auto& r : s.reports)
    if (r.site_specific == site_specific) return &r;
  return nullptr;
}

}  // namespace

std::vector<RunSummary> load_runs(const fs::path& dir) {
  if (fs::exists(dir / "report.json")) return {load_one(dir)};
  std::vector<fs::path> subdirs;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.is_directory() && fs::exists(entry.path() / "report.json")) subdirs.push_back(entry.path());
  }
  if (subdirs.empty()) throw Error(ErrorCode::MissingArtifact, "no report.json under " + dir.string());
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<RunSummary> out;
  for (const auto& d : subdirs) out.push_back(load_one(d));
  return out;
}

std::string cmd_compare(std::span<const fs::path> dirs) {
  std::vector<RunSummary> runs;
  for (const auto& d : dirs) {
    auto loaded = load_runs(d);
    runs.insert(runs.end(), loaded.begin(), loaded.end());
  }
  if (runs.size() < 2) throw Error(ErrorCode::MissingArtifact, "compare needs at least two completed runs");

  std::string out;
  auto row_line = [](const std::string& method, const EvalRow& r) {
    return method + "," + r.site + "," + std::string(to_string(r.split)) + "," + std::to_string(r.n_cases) + "," +
           fmt_double(r.mean_dsc) + "\n";
  };

  // Site-level local-test DSCs: site models where they exist, else the global model.
  out += "# site_specific_local_test\nmethod,site,split,n_cases,mean_dsc\n";
  std::vector<std::pair<std::string, double>> local_aggs;
  for (const auto& run : runs) {
    const EvalReport* rep = find_report(run, true);
    if (!rep) rep = find_report(run, false);
    if (!rep) continue;
    for (const auto& r : rep->rows)
      if (r.split == EvalSplit::LocalTest) out += row_line(rep->method, r);
    local_aggs.emplace_back(rep->method, rep->aggregated_dsc);
  }
  out += "\n# site_specific_aggregated\nmethod,aggregated_local_test,delta_vs_first\n";
  for (const auto& [m, v] : local_aggs)
    out += m + "," + fmt_double(v) + "," + fmt_double(v - local_aggs.front().second) + "\n";

  out += "\n# site_models_local_vs_out_of_sample\nmethod,site,split,n_cases,mean_dsc\n";
  std::vector<const EvalReport*> site_reports;
  for (const auto& run : runs) {
    if (const EvalReport* rep = find_report(run, true)) {
      site_reports.push_back(rep);
      for (const auto& r : rep->rows) out += row_line(rep->method, r);
    }
  }
  auto aggregate_block = [&](const std::vector<const EvalReport*>& reps) {
    std::string block = "method,aggregated_local_test,aggregated_out_of_sample,delta_local_vs_first,delta_out_of_sample_vs_first\n";
    for (const EvalReport* r : reps) {
      block += r->method + "," + fmt_double(r->aggregated_dsc) + "," + fmt_double(r->aggregated_out_of_sample) + "," +
               fmt_double(r->aggregated_dsc - reps.front()->aggregated_dsc) + "," +
               fmt_double(r->aggregated_out_of_sample - reps.front()->aggregated_out_of_sample) + "\n";
    }
    return block;
  };
  out += "\n# site_models_aggregated\n" + aggregate_block(site_reports);

  std::vector<const EvalReport*> global_reports;
  for (const auto& run : runs)
    for (const auto& r : run.reports)
      if (!r.site_specific) global_reports.push_back(&r);
  out += "\n# global_models\n" + aggregate_block(global_reports);

  out += "\n# communication\nmethod,post_warmup_rounds,messages,bytes\n";
  const RunSummary* gml = nullptr;
  const RunSummary* fedavg = nullptr;
  for (const auto& run : runs) {
    out += run.method + "," + std::to_string(run.post_warmup_rounds) + "," + std::to_string(run.comms.messages) + "," +
           std::to_string(run.comms.bytes) + "\n";
    if (run.method == "gml" && !gml) gml = &run;
    if (run.method == "fedavg" && !fedavg) fedavg = &run;
  }
  if (gml && fedavg && fedavg->comms.messages > 0) {
    const double ratio = static_cast<double>(gml->comms.messages) / static_cast<double>(fedavg->comms.messages);
    out += "\n# gml_fedavg_message_ratio\ngml_messages,fedavg_messages,ratio\n" + std::to_string(gml->comms.messages) +
           "," + std::to_string(fedavg->comms.messages) + "," + fmt_double(ratio, "%.4f") + "\n";
  }
  return out;
}

}  // namespace gml
