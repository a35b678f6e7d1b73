#include "run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>

#include "tsdec/error.hpp"

namespace tsdec::cli {

namespace fs = std::filesystem;

namespace {

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

fs::path resolve_input(const nlohmann::json& value, const fs::path& base_dir) {
  fs::path p = value.get<std::string>();
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

std::vector<LabeledCheckpoint> labeled_from_json(const nlohmann::json& j, const fs::path& base_dir,
                                                 const std::string& where) {
  std::vector<LabeledCheckpoint> out;
  for (const auto& item : j) {
    reject_unknown(item, {"label", "checkpoint"}, where);
    out.push_back({item.at("label").get<std::string>(), resolve_input(item.at("checkpoint"), base_dir)});
  }
  return out;
}

nlohmann::json labeled_to_json(const std::vector<LabeledCheckpoint>& v) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : v) out.push_back({{"label", l.label}, {"checkpoint", l.checkpoint.string()}});
  return out;
}

}  // namespace

DatasetSpec dataset_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown(j, {"name", "csv", "granularity", "log_transform", "synthetic", "seed", "family", "role"}, "dataset");
  DatasetSpec d;
  d.name = j.value("name", "");
  if (j.contains("csv")) d.csv = resolve_input(j.at("csv"), base_dir);
  if (j.contains("granularity")) d.granularity = parse_granularity(j.at("granularity").get<std::string>());
  d.log_transform = j.value("log_transform", false);
  if (j.contains("synthetic")) {
    const auto& spec = j.at("synthetic");
    d.synthetic = spec.is_string() ? read_json_file(resolve_input(spec, base_dir)).get<SyntheticCorpusSpec>()
                                   : spec.get<SyntheticCorpusSpec>();
  }
  d.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("family")) d.family = j.at("family").get<std::string>();
  if (j.contains("role")) {
    const auto role = j.at("role").get<std::string>();
    if (role != "pretrain" && role != "holdout") throw ConfigError("dataset: role must be pretrain or holdout");
    d.role = role == "pretrain" ? FamilyRole::kPretrain : FamilyRole::kHoldout;
  }
  if (d.csv.has_value() == d.synthetic.has_value()) {
    throw ConfigError("dataset: exactly one of 'csv' or 'synthetic' is required");
  }
  if (d.name.empty()) d.name = d.csv ? d.csv->stem().string() : "synthetic";
  return d;
}

nlohmann::json dataset_to_json(const DatasetSpec& d) {
  nlohmann::json j{{"name", d.name}};
  if (d.csv) {
    j["csv"] = d.csv->string();
    if (d.granularity) j["granularity"] = to_string(*d.granularity);
    j["log_transform"] = d.log_transform;
  } else {
    j["synthetic"] = *d.synthetic;
    j["seed"] = d.seed;
    if (d.family) j["family"] = *d.family;
    if (d.role) j["role"] = *d.role == FamilyRole::kPretrain ? "pretrain" : "holdout";
  }
  return j;
}

std::vector<TimeSeries> load_dataset(const DatasetSpec& d) {
  if (d.csv) {
    IngestResult r = ingest_csv(*d.csv, CsvSchema{d.granularity, d.log_transform});
    for (const auto& s : r.skipped) std::cerr << "skipped series '" << s.id << "': " << s.reason << "\n";
    if (r.series.empty()) throw ConfigError("dataset '" + d.name + "': no usable series in " + d.csv->string());
    return std::move(r.series);
  }
  std::vector<TimeSeries> all = synth_corpus(*d.synthetic, d.seed);
  std::vector<TimeSeries> out;
  for (auto& s : all) {
    // ids are "<family>-<granularity>-<k>"; family names may contain '-'.
    const std::string family = s.id.substr(0, s.id.rfind('-', s.id.rfind('-') - 1));
    if (d.family && family != *d.family) continue;
    if (d.role && d.synthetic->family(family).role != *d.role) continue;
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ConfigError("dataset '" + d.name + "': filters leave no series");
  return out;
}

ModelConfig model_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model: expected an object");
  ModelConfig c = ModelConfig::desk_scale();
  nlohmann::json overrides = j;
  if (overrides.contains("preset")) {
    const auto preset = overrides.at("preset").get<std::string>();
    if (preset == "full") {
      c = ModelConfig::full_scale();
    } else if (preset != "desk") {
      throw ConfigError("model: unknown preset '" + preset + "' (expected desk or full)");
    }
    overrides.erase("preset");
  }
  from_json(overrides, c);
  c.validate();
  return c;
}

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
}

PretrainConfig pretrain_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown(j, {"output_dir", "seed", "corpus", "model", "train", "resume_from"}, "pretrain config");
  PretrainConfig c;
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  c.seed = j.value("seed", std::uint64_t{0});
  if (!j.contains("corpus") || !j.at("corpus").is_array() || j.at("corpus").empty()) {
    throw ConfigError("pretrain config: 'corpus' must be a non-empty list of datasets");
  }
  for (const auto& d : j.at("corpus")) c.corpus.push_back(dataset_from_json(d, base_dir));
  if (j.contains("model")) c.model = model_from_json(j.at("model"));
  c.train.seed = c.seed;
  if (j.contains("train")) from_json(j.at("train"), c.train);
  c.train.validate();
  if (j.contains("resume_from")) c.resume_from = resolve_input(j.at("resume_from"), base_dir);
  return c;
}

nlohmann::json pretrain_to_json(const PretrainConfig& c) {
  nlohmann::json corpus = nlohmann::json::array();
  for (const auto& d : c.corpus) corpus.push_back(dataset_to_json(d));
  nlohmann::json j{{"output_dir", c.output_dir.string()},
                   {"seed", c.seed},
                   {"corpus", corpus},
                   {"model", c.model},
                   {"train", c.train}};
  if (c.resume_from) j["resume_from"] = c.resume_from->string();
  return j;
}

EvaluateConfig evaluate_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown(j, {"output_dir", "checkpoint", "dataset", "tasks", "season"}, "evaluate config");
  EvaluateConfig c;
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  if (j.contains("checkpoint")) c.checkpoint = resolve_input(j.at("checkpoint"), base_dir);
  if (j.contains("dataset")) c.dataset = dataset_from_json(j.at("dataset"), base_dir);
  if (j.contains("tasks")) {
    for (const auto& t : j.at("tasks")) {
      reject_unknown(t, {"context", "horizon", "stride"}, "evaluate task");
      EvalTaskSpec spec;
      spec.context = t.value("context", spec.context);
      spec.horizon = t.value("horizon", spec.horizon);
      spec.stride = t.value("stride", spec.stride);
      c.tasks.push_back(spec);
    }
  }
  if (j.contains("season")) c.season = j.at("season").get<std::size_t>();
  return c;
}

nlohmann::json evaluate_to_json(const EvaluateConfig& c) {
  nlohmann::json tasks = nlohmann::json::array();
  for (const auto& t : c.tasks) tasks.push_back({{"context", t.context}, {"horizon", t.horizon}, {"stride", t.stride}});
  nlohmann::json j{{"output_dir", c.output_dir.string()}, {"tasks", tasks}};
  if (c.checkpoint) j["checkpoint"] = c.checkpoint->string();
  if (c.dataset) j["dataset"] = dataset_to_json(*c.dataset);
  if (c.season) j["season"] = *c.season;
  return j;
}

AblateConfig ablate_from_json(const nlohmann::json& j, const fs::path& base_dir) {
  reject_unknown(j,
                 {"output_dir", "suite", "datasets", "context_checkpoint", "input_patch_checkpoints",
                  "output_patch_checkpoints", "settings"},
                 "ablate config");
  AblateConfig c;
  if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
  c.suite = j.value("suite", c.suite);
  if (j.contains("datasets"))
    for (const auto& d : j.at("datasets")) c.datasets.push_back(dataset_from_json(d, base_dir));
  if (j.contains("context_checkpoint")) c.context_checkpoint = resolve_input(j.at("context_checkpoint"), base_dir);
  if (j.contains("input_patch_checkpoints"))
    c.input_patch_checkpoints = labeled_from_json(j.at("input_patch_checkpoints"), base_dir, "input_patch_checkpoints");
  if (j.contains("output_patch_checkpoints"))
    c.output_patch_checkpoints =
        labeled_from_json(j.at("output_patch_checkpoints"), base_dir, "output_patch_checkpoints");
  if (j.contains("settings")) {
    const auto& s = j.at("settings");
    reject_unknown(s,
                   {"contexts", "context_horizon", "patch_context", "patch_horizon", "long_context", "long_horizon",
                    "stride"},
                   "ablate settings");
    auto& a = c.settings;
    if (s.contains("contexts")) a.contexts = s.at("contexts").get<std::vector<std::size_t>>();
    a.context_horizon = s.value("context_horizon", a.context_horizon);
    a.patch_context = s.value("patch_context", a.patch_context);
    a.patch_horizon = s.value("patch_horizon", a.patch_horizon);
    a.long_context = s.value("long_context", a.long_context);
    a.long_horizon = s.value("long_horizon", a.long_horizon);
    a.stride = s.value("stride", a.stride);
  }
  return c;
}

nlohmann::json ablate_to_json(const AblateConfig& c) {
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& d : c.datasets) datasets.push_back(dataset_to_json(d));
  const auto& a = c.settings;
  nlohmann::json j{{"output_dir", c.output_dir.string()},
                   {"suite", c.suite},
                   {"datasets", datasets},
                   {"input_patch_checkpoints", labeled_to_json(c.input_patch_checkpoints)},
                   {"output_patch_checkpoints", labeled_to_json(c.output_patch_checkpoints)},
                   {"settings",
                    {{"contexts", a.contexts},
                     {"context_horizon", a.context_horizon},
                     {"patch_context", a.patch_context},
                     {"patch_horizon", a.patch_horizon},
                     {"long_context", a.long_context},
                     {"long_horizon", a.long_horizon},
                     {"stride", a.stride}}}};
  if (c.context_checkpoint) j["context_checkpoint"] = c.context_checkpoint->string();
  return j;
}

fs::path resolve_output_dir(const fs::path& configured) {
  const char* env = std::getenv(kOutputDirEnv);
  return env && *env ? fs::path(env) : configured;
}

void write_snapshot(const fs::path& dir, const nlohmann::json& resolved) {
  fs::create_directories(dir);
  std::ofstream out(dir / "resolved_config.json");
  out << resolved.dump(2) << "\n";
}

std::size_t default_season(Granularity g) {
  switch (g) {
    case Granularity::kMinutes15: return 96;
    case Granularity::kHourly: return 24;
    case Granularity::kDaily: return 7;
    case Granularity::kWeekly: return 52;
    case Granularity::kMonthly: return 12;
  }
  return 1;
}

}  // namespace tsdec::cli
