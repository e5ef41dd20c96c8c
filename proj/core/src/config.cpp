#include "gml/config.hpp"

#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace gml {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(GossipMode mode) noexcept { return mode == GossipMode::Single ? "single" : "bernoulli"; }
std::string_view to_string(KldVariant v) noexcept { return v == KldVariant::Eq1 ? "eq1" : "full"; }
std::string_view to_string(OptimizerKind k) noexcept { return k == OptimizerKind::Adam ? "adam" : "sgd"; }

std::vector<ParticipantSpec> default_participants() {
  // Lesion sizes differ per participant; signal-to-noise stays comparable so a
  // peer's model is informative on another participant's scans.
  return {
      {{"site_a", 16, 2.0, 4.0, 1.6, 1.0, 1.0, 0.0}, {}},
      {{"site_b", 28, 3.0, 6.0, 1.4, 0.8, 1.0, 0.0}, {}},
      {{"site_c", 36, 4.0, 7.0, 1.8, 1.0, 1.0, 0.0}, {}},
  };
}

std::vector<SiteGenSpec> default_held_out_sites() {
  return {
      {"heldout_d", 10, 3.0, 6.0, 1.5, 0.9, 1.0, 0.0},
      {"heldout_e", 10, 2.5, 7.0, 1.7, 1.0, 1.0, 0.0},
  };
}

ExperimentConfig default_config() {
  ExperimentConfig c;
  c.sites = default_participants();
  c.held_out_sites = default_held_out_sites();
  return c;
}

TrainingOptions ExperimentConfig::training_options() const { return {arch, optimizer, loss, seed}; }

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + what);
}

bool valid_site_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  for (char c : id)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (image_extent < 8 || image_extent > 4096) invalid("image_extent", "must be in [8, 4096]");

  if (sites.empty()) invalid("sites", "need at least one participant");
  std::set<std::string> ids;
  auto check_site = [&](const SiteGenSpec& s, const std::string& field) {
    if (!valid_site_id(s.site_id)) invalid(field, "site_id must match [A-Za-z0-9_-]{1,64}");
    if (!ids.insert(s.site_id).second) invalid(field, "duplicate site_id '" + s.site_id + "'");
    try {
      s.validate(image_extent);
    } catch (const Error& e) {
      invalid(field, e.what());
    }
  };
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const std::string field = "sites[" + std::to_string(i) + "]";
    check_site(sites[i].gen, field);
    try {
      split_sizes(static_cast<std::size_t>(sites[i].gen.n_cases), sites[i].split);
    } catch (const Error& e) {
      invalid(field + ".split", e.what());
    }
  }
  for (std::size_t i = 0; i < held_out_sites.size(); ++i) {
    const std::string field = "held_out_sites[" + std::to_string(i) + "]";
    check_site(held_out_sites[i], field);
    if (held_out_sites[i].n_cases < 1) invalid(field, "held-out sites need at least one case");
  }

  try {
    arch.validate();
  } catch (const Error& e) {
    invalid("model", e.what());
  }
  if (arch.spatial_rank != 2) invalid("model", "the synthetic generator produces rank-2 images; spatial_rank must be 2");
  if (arch.in_channels != 1) invalid("model", "the synthetic generator produces single-channel images; in_channels must be 1");
  if (!(optimizer.learning_rate >= 0.0) || !std::isfinite(optimizer.learning_rate)) invalid("model", "learning_rate must be >= 0");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) invalid("model", "momentum must be in [0,1)");

  if (schedule.total_rounds < 1) invalid("schedule", "total_rounds must be >= 1");
  if (schedule.warmup_rounds < 0 || schedule.warmup_rounds >= schedule.total_rounds)
    invalid("schedule", "warmup_rounds must be in [0, total_rounds)");
  if (schedule.local_epochs_per_round < 1) invalid("schedule", "local_epochs_per_round must be >= 1");
  if (schedule.mutual_epochs < 1) invalid("schedule", "mutual_epochs must be >= 1");

  if (!(loss.jaccard_eps > 0.0)) invalid("loss", "eps must be > 0");
  if (!(loss.clamp > 0.0 && loss.clamp < 0.5)) invalid("loss", "clamp must be in (0, 0.5)");

  if (!(eval.threshold > 0.0 && eval.threshold < 1.0)) invalid("eval", "threshold must be in (0,1)");
  if (eval.aggregation_weights) {
    if (eval.aggregation_weights->size() != sites.size()) invalid("eval", "need one aggregation weight per site");
    for (double w : *eval.aggregation_weights)
      if (!(w > 0.0)) invalid("eval", "aggregation weights must be positive");
  }
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

/// Reads the known keys of one JSON object and rejects everything else.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw Error(ErrorCode::BadConfig, where() + "expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadConfig, path_ + "." + key + ": " + e.what());
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string sub(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.contains(it.key())) throw Error(ErrorCode::BadConfig, "unknown key '" + sub(it.key()) + "'");
    }
  }

 private:
  std::string where() const { return path_.empty() ? "" : path_ + ": "; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_site(const json& j, const std::string& path, SiteGenSpec& s) {
  ObjectReader r(j, path);
  r.get("site_id", s.site_id);
  r.get("n_cases", s.n_cases);
  if (const json* range = r.child("blob_radius_range")) {
    if (!range->is_array() || range->size() != 2 || !(*range)[0].is_number() || !(*range)[1].is_number())
      throw Error(ErrorCode::BadConfig, path + ".blob_radius_range: expected [min, max]");
    s.blob_radius_min = (*range)[0].get<double>();
    s.blob_radius_max = (*range)[1].get<double>();
  }
  r.get("tumor_intensity", s.tumor_intensity);
  r.get("background_noise_sigma", s.background_noise_sigma);
  r.get("contrast_scale", s.contrast_scale);
  r.get("tumor_free_fraction", s.tumor_free_fraction);
  r.finish();
}

void read_participant(const json& j, const std::string& path, ParticipantSpec& p) {
  // Split ratios sit next to the generator knobs; peel them off first.
  if (!j.is_object()) throw Error(ErrorCode::BadConfig, path + ": expected an object");
  json gen = j;
  if (auto it = gen.find("split"); it != gen.end()) {
    ObjectReader r(*it, path + ".split");
    r.get("train", p.split.train);
    r.get("val", p.split.val);
    r.get("test", p.split.test);
    r.finish();
    gen.erase("split");
  }
  read_site(gen, path, p.gen);
}

template <typename E>
E parse_enum(const std::string& value, const std::string& field, std::initializer_list<std::pair<const char*, E>> options) {
  for (const auto& [name, e] : options)
    if (value == name) return e;
  throw Error(ErrorCode::BadConfig, field + ": unknown value '" + value + "'");
}

std::size_t line_of_offset(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) line += text[i] == '\n';
  return line;
}

}  // namespace

ExperimentConfig config_parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadConfig, "line " + std::to_string(line_of_offset(json_text, e.byte)) + ": " + e.what());
  }

  ExperimentConfig c = default_config();
  ObjectReader r(root, "");
  r.get("seed", c.seed);
  r.get("image_extent", c.image_extent);

  if (const json* sites = r.child("sites")) {
    if (!sites->is_array()) throw Error(ErrorCode::BadConfig, "sites: expected an array");
    c.sites.clear();
    for (std::size_t i = 0; i < sites->size(); ++i) {
      ParticipantSpec p;
      read_participant((*sites)[i], "sites[" + std::to_string(i) + "]", p);
      c.sites.push_back(std::move(p));
    }
  }
  if (const json* held = r.child("held_out_sites")) {
    if (!held->is_array()) throw Error(ErrorCode::BadConfig, "held_out_sites: expected an array");
    c.held_out_sites.clear();
    for (std::size_t i = 0; i < held->size(); ++i) {
      SiteGenSpec s;
      read_site((*held)[i], "held_out_sites[" + std::to_string(i) + "]", s);
      c.held_out_sites.push_back(std::move(s));
    }
  }
  if (const json* model = r.child("model")) {
    ObjectReader m(*model, "model");
    m.get("spatial_rank", c.arch.spatial_rank);
    m.get("in_channels", c.arch.in_channels);
    m.get("hidden_channels", c.arch.hidden_channels);
    m.get("kernel", c.arch.kernel);
    std::string kind(to_string(c.optimizer.kind));
    m.get("optimizer", kind);
    c.optimizer.kind = parse_enum<OptimizerKind>(kind, "model.optimizer", {{"adam", OptimizerKind::Adam}, {"sgd", OptimizerKind::Sgd}});
    m.get("learning_rate", c.optimizer.learning_rate);
    m.get("momentum", c.optimizer.momentum);
    m.get("beta1", c.optimizer.beta1);
    m.get("beta2", c.optimizer.beta2);
    m.get("epsilon", c.optimizer.epsilon);
    m.finish();
  }
  if (const json* sched = r.child("schedule")) {
    ObjectReader s(*sched, "schedule");
    s.get("total_rounds", c.schedule.total_rounds);
    s.get("warmup_rounds", c.schedule.warmup_rounds);
    s.get("local_epochs_per_round", c.schedule.local_epochs_per_round);
    s.get("mutual_epochs", c.schedule.mutual_epochs);
    std::string mode(to_string(c.schedule.mode));
    s.get("gossip_mode", mode);
    c.schedule.mode = parse_enum<GossipMode>(mode, "schedule.gossip_mode", {{"single", GossipMode::Single}, {"bernoulli", GossipMode::Bernoulli}});
    s.finish();
  }
  if (const json* loss = r.child("loss")) {
    ObjectReader l(*loss, "loss");
    l.get("eps", c.loss.jaccard_eps);
    std::string variant(to_string(c.loss.kld_variant));
    l.get("kld_variant", variant);
    c.loss.kld_variant = parse_enum<KldVariant>(variant, "loss.kld_variant", {{"eq1", KldVariant::Eq1}, {"full", KldVariant::Full}});
    l.get("clamp", c.loss.clamp);
    l.finish();
  }
  if (const json* ev = r.child("eval")) {
    ObjectReader e(*ev, "eval");
    e.get("threshold", c.eval.threshold);
    if (const json* w = e.child("aggregation_weights")) {
      if (w->is_string()) {
        if (w->get<std::string>() != "test_counts")
          throw Error(ErrorCode::BadConfig, "eval.aggregation_weights: expected \"test_counts\" or a list");
        c.eval.aggregation_weights.reset();
      } else {
        try {
          c.eval.aggregation_weights = w->get<std::vector<double>>();
        } catch (const json::exception& ex) {
          throw Error(ErrorCode::BadConfig, std::string("eval.aggregation_weights: ") + ex.what());
        }
      }
    }
    e.finish();
  }
  r.finish();

  c.validate();
  return c;
}

ExperimentConfig config_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_parse(ss.str());
}

namespace {

ordered_json site_json(const SiteGenSpec& s) {
  ordered_json j;
  j["site_id"] = s.site_id;
  j["n_cases"] = s.n_cases;
  j["blob_radius_range"] = {s.blob_radius_min, s.blob_radius_max};
  j["tumor_intensity"] = s.tumor_intensity;
  j["background_noise_sigma"] = s.background_noise_sigma;
  j["contrast_scale"] = s.contrast_scale;
  j["tumor_free_fraction"] = s.tumor_free_fraction;
  return j;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["image_extent"] = c.image_extent;
  j["sites"] = ordered_json::array();
  for (const auto& p : c.sites) {
    ordered_json s = site_json(p.gen);
    s["split"] = {{"train", p.split.train}, {"val", p.split.val}, {"test", p.split.test}};
    j["sites"].push_back(s);
  }
  j["held_out_sites"] = ordered_json::array();
  for (const auto& s : c.held_out_sites) j["held_out_sites"].push_back(site_json(s));
  j["model"] = {{"spatial_rank", c.arch.spatial_rank},
                {"in_channels", c.arch.in_channels},
                {"hidden_channels", c.arch.hidden_channels},
                {"kernel", c.arch.kernel},
                {"optimizer", to_string(c.optimizer.kind)},
                {"learning_rate", c.optimizer.learning_rate},
                {"momentum", c.optimizer.momentum},
                {"beta1", c.optimizer.beta1},
                {"beta2", c.optimizer.beta2},
                {"epsilon", c.optimizer.epsilon}};
  j["schedule"] = {{"total_rounds", c.schedule.total_rounds},
                   {"warmup_rounds", c.schedule.warmup_rounds},
                   {"local_epochs_per_round", c.schedule.local_epochs_per_round},
                   {"mutual_epochs", c.schedule.mutual_epochs},
                   {"gossip_mode", to_string(c.schedule.mode)}};
  j["loss"] = {{"eps", c.loss.jaccard_eps}, {"kld_variant", to_string(c.loss.kld_variant)}, {"clamp", c.loss.clamp}};
  j["eval"]["threshold"] = c.eval.threshold;
  if (c.eval.aggregation_weights)
    j["eval"]["aggregation_weights"] = *c.eval.aggregation_weights;
  else
    j["eval"]["aggregation_weights"] = "test_counts";
  return j.dump(2) + "\n";
}

}  // namespace gml
