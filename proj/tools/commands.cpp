#include "commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "run_config.hpp"
#include "tsdec/checkpoint.hpp"
#include "tsdec/error.hpp"
#include "tsdec/eval.hpp"
#include "tsdec/inference.hpp"
#include "tsdec/training.hpp"

namespace tsdec::cli {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

// Runs `body`, mapping library errors onto exit codes with a message.
template <typename F>
int guarded(const char* command, F&& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const RequestError& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << command << ": malformed config value: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << command << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

const std::vector<std::string>& valid_suites() {
  static const std::vector<std::string> suites{"context", "input-patch", "output-patch", "all"};
  return suites;
}

}  // namespace

// ---------------------------------------------------------------------------

int cmd_pretrain(const PretrainArgs& args) {
  return guarded("pretrain", [&] {
    PretrainConfig cfg = pretrain_from_json(read_json_file(args.config), args.config.parent_path());
    if (args.output_dir) cfg.output_dir = *args.output_dir;
    if (args.resume_from) cfg.resume_from = *args.resume_from;
    cfg.output_dir = resolve_output_dir(cfg.output_dir);

    std::vector<TimeSeries> corpus;
    for (const auto& d : cfg.corpus) {
      auto part = load_dataset(d);
      corpus.insert(corpus.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
    }
    write_snapshot(cfg.output_dir, pretrain_to_json(cfg));
    write_text(cfg.output_dir / "corpus_manifest.json", corpus_manifest(corpus).dump(2) + "\n");

    TrainOptions opts;
    opts.output_dir = cfg.output_dir;
    opts.resume_from = cfg.resume_from;
    opts.init_seed = cfg.seed;
    opts.on_step = [&](const LossPoint& p) {
      if (p.val_loss) {
        std::cout << fmt::format("step {:>6}  train {:.6f}  val {:.6f}\n", p.step, p.train_loss, *p.val_loss);
      }
    };
    std::cout << fmt::format("pretraining on {} series for {} steps\n", corpus.size(), cfg.train.total_steps);
    const TrainResult result = train(corpus, cfg.model, cfg.train, opts);
    std::cout << fmt::format("{} parameters; wrote {}\n", result.model.weights().parameter_count(),
                             (cfg.output_dir / "model.ckpt").string());
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_forecast(const ForecastArgs& args) {
  if (args.horizon && *args.horizon == 0) {
    std::cerr << "forecast: horizon must be >= 1\n";
    return kExitUsage;
  }
  return guarded("forecast", [&] {
    const fs::path out_dir = resolve_output_dir(args.output_dir);
    std::ifstream in(args.input);
    if (!in) throw ConfigError("cannot open input " + args.input.string());
    const Forecaster forecaster = Forecaster::from_checkpoint(load_checkpoint(args.checkpoint));
    const std::size_t r = forecaster.model().config().feature_dim;

    nlohmann::json snapshot{{"checkpoint", args.checkpoint.string()},
                            {"input", args.input.string()},
                            {"output", (out_dir / args.output_name).string()}};
    if (args.horizon) snapshot["horizon"] = *args.horizon;
    write_snapshot(out_dir, snapshot);
    std::ofstream out(out_dir / args.output_name, std::ios::trunc);

    std::string line;
    std::size_t line_no = 0, ok = 0, failed = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json record_out;
      try {
        const auto rec = nlohmann::json::parse(line);
        record_out["id"] = rec.value("id", fmt::format("line-{}", line_no));
        ForecastRequest req;
        req.context = rec.at("context").get<std::vector<double>>();
        if (rec.contains("horizon")) {
          req.horizon = rec.at("horizon").get<std::size_t>();
        } else if (args.horizon) {
          req.horizon = *args.horizon;
        } else {
          throw RequestError("no horizon in the record and none given on the command line");
        }
        if (rec.contains("start") && r > 0) {
          if (!rec.contains("granularity")) throw RequestError("'start' requires 'granularity'");
          const Granularity g = parse_granularity(rec.at("granularity").get<std::string>());
          req.features = features_for(parse_timestamp(rec.at("start").get<std::string>()), g,
                                      req.context.size() + req.horizon, r);
        }
        record_out["predictions"] = forecaster.forecast(req).predictions;
        ++ok;
      } catch (const std::exception& e) {
        if (!record_out.contains("id")) record_out["id"] = fmt::format("line-{}", line_no);
        record_out["error"] = e.what();
        ++failed;
      }
      out << record_out.dump() << "\n";
    }
    std::cout << fmt::format("forecast: {} records written, {} errors -> {}\n", ok, failed,
                             (out_dir / args.output_name).string());
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_evaluate(const EvaluateArgs& args) {
  return guarded("evaluate", [&] {
    EvaluateConfig cfg;
    if (args.config) cfg = evaluate_from_json(read_json_file(*args.config), args.config->parent_path());
    if (args.checkpoint) cfg.checkpoint = *args.checkpoint;
    if (args.dataset_csv) {
      DatasetSpec d;
      d.csv = *args.dataset_csv;
      d.name = args.dataset_csv->stem().string();
      if (args.granularity) d.granularity = parse_granularity(*args.granularity);
      cfg.dataset = d;
    }
    if (args.context || args.horizon || args.stride) {
      EvalTaskSpec t = cfg.tasks.empty() ? EvalTaskSpec{} : cfg.tasks.front();
      if (args.context) t.context = *args.context;
      if (args.horizon) t.horizon = *args.horizon;
      if (args.stride) t.stride = *args.stride;
      cfg.tasks = {t};
    }
    if (cfg.tasks.empty()) cfg.tasks.push_back({});
    if (args.season) cfg.season = *args.season;
    if (args.output_dir) cfg.output_dir = *args.output_dir;
    cfg.output_dir = resolve_output_dir(cfg.output_dir);
    if (!cfg.checkpoint) throw ConfigError("a checkpoint is required (--checkpoint or config 'checkpoint')");
    if (!cfg.dataset) throw ConfigError("a dataset is required (--dataset or config 'dataset')");
    for (const auto& t : cfg.tasks) {
      if (t.context < 1 || t.horizon < 1 || t.stride < 1) throw ConfigError("context, horizon and stride must be >= 1");
    }

    const Forecaster forecaster = Forecaster::from_checkpoint(load_checkpoint(*cfg.checkpoint));
    const std::vector<TimeSeries> series = load_dataset(*cfg.dataset);
    const std::size_t season = cfg.season.value_or(default_season(series.front().granularity));
    cfg.season = season;
    write_snapshot(cfg.output_dir, evaluate_to_json(cfg));

    struct Entry {
      std::string name;
      ForecastFn fn;
    };
    const std::vector<Entry> entries{{"model", model_forecast_fn(forecaster)},
                                     {"repeat-last", repeat_last_fn()},
                                     {fmt::format("seasonal-naive-{}", season), seasonal_naive_fn(season)}};
    for (const auto& t : cfg.tasks) {
      const EvalTask task{cfg.dataset->name, t.context, t.horizon, t.stride};
      Table table;
      table.title = fmt::format("{}: context {}, horizon {}, stride {}", task.dataset, t.context, t.horizon, t.stride);
      table.row_header = "model";
      table.columns = {"NRMSE", "WAPE", "windows", "excluded"};
      for (const auto& e : entries) {
        const EvalReport report = rolling_eval(series, task, e.fn, e.name);
        const std::string stem = fmt::format("{}_c{}_h{}_{}", task.dataset, t.context, t.horizon, e.name);
        write_text(cfg.output_dir / (stem + ".json"), report.to_json().dump(2) + "\n");
        write_text(cfg.output_dir / (stem + "_summary.csv"), report.summary_csv());
        write_text(cfg.output_dir / (stem + "_windows.csv"), report.windows_csv());
        table.rows.push_back({e.name,
                              {fmt::format("{:.4f}", report.pooled.nrmse), fmt::format("{:.4f}", report.pooled.wape),
                               std::to_string(report.pooled.windows), std::to_string(report.pooled.excluded)}});
      }
      const std::string rendered = render_table(table);
      std::cout << rendered << "\n";
      write_text(cfg.output_dir / fmt::format("{}_c{}_h{}_table.txt", task.dataset, t.context, t.horizon), rendered);
    }
    return kExitOk;
  });
}

// ---------------------------------------------------------------------------

int cmd_ablate(const AblateArgs& args) {
  return guarded("ablate", [&] {
    AblateConfig cfg = ablate_from_json(read_json_file(args.config), args.config.parent_path());
    if (args.suite) cfg.suite = *args.suite;
    if (args.output_dir) cfg.output_dir = *args.output_dir;
    cfg.output_dir = resolve_output_dir(cfg.output_dir);
    const auto& suites = valid_suites();
    if (std::find(suites.begin(), suites.end(), cfg.suite) == suites.end()) {
      throw ConfigError(fmt::format("unknown suite '{}'; valid suites: {}", cfg.suite, fmt::join(suites, ", ")));
    }
    const bool all = cfg.suite == "all";
    const bool run_context = all || cfg.suite == "context";
    const bool run_input = all || cfg.suite == "input-patch";
    const bool run_output = all || cfg.suite == "output-patch";
    if (cfg.datasets.empty()) throw ConfigError("ablate config: 'datasets' is empty");
    if (run_context && !cfg.context_checkpoint) throw ConfigError("suite 'context' needs 'context_checkpoint'");
    if (run_input && cfg.input_patch_checkpoints.size() < 2) {
      throw ConfigError("suite 'input-patch' needs at least two 'input_patch_checkpoints'");
    }
    if (run_output && cfg.output_patch_checkpoints.size() < 2) {
      throw ConfigError("suite 'output-patch' needs at least two 'output_patch_checkpoints'");
    }

    std::vector<AblationDataset> datasets;
    for (const auto& d : cfg.datasets) datasets.push_back({d.name, load_dataset(d)});
    write_snapshot(cfg.output_dir, ablate_to_json(cfg));

    auto emit = [&](const std::string& stem, const Table& table) {
      const std::string rendered = render_table(table);
      std::cout << rendered << "\n";
      write_text(cfg.output_dir / (stem + ".txt"), rendered);
      write_text(cfg.output_dir / (stem + ".csv"), table_csv(table));
    };
    auto load_models = [](const std::vector<LabeledCheckpoint>& list, std::vector<Forecaster>& storage) {
      storage.reserve(list.size());
      std::vector<LabeledModel> models;
      for (const auto& l : list) storage.push_back(Forecaster::from_checkpoint(load_checkpoint(l.checkpoint)));
      for (std::size_t i = 0; i < list.size(); ++i) models.push_back({list[i].label, &storage[i]});
      return models;
    };

    if (run_context) {
      const Forecaster f = Forecaster::from_checkpoint(load_checkpoint(*cfg.context_checkpoint));
      std::vector<ContextSweep> curves;
      emit("table_context", context_sweep_table(f, datasets, cfg.settings, &curves));
      std::string csv = "dataset,context,nrmse,wape,windows\n";
      for (std::size_t d = 0; d < curves.size(); ++d) {
        for (std::size_t k = 0; k < curves[d].contexts.size(); ++k) {
          const auto& m = curves[d].metrics[k];
          csv += fmt::format("{},{},{:.17g},{:.17g},{}\n", datasets[d].name, curves[d].contexts[k], m.nrmse, m.wape,
                             m.windows);
        }
      }
      write_text(cfg.output_dir / "context_curves.csv", csv);
    }
    if (run_input) {
      std::vector<Forecaster> storage;
      const auto models = load_models(cfg.input_patch_checkpoints, storage);
      emit("table_input_patch", input_patch_table(models, datasets, cfg.settings));
    }
    if (run_output) {
      std::vector<Forecaster> storage;
      const auto models = load_models(cfg.output_patch_checkpoints, storage);
      emit("table_output_patch", output_patch_table(models, datasets, cfg.settings));
    }
    return kExitOk;
  });
}

std::string defaults_json() {
  const AblationSettings a;
  const nlohmann::json j{
      {"model.desk", ModelConfig::desk_scale()},
      {"model.full", ModelConfig::full_scale()},
      {"train", TrainConfig{}},
      {"evaluate.task", {{"context", 512}, {"horizon", 96}, {"stride", 1}}},
      {"ablate.settings",
       {{"contexts", a.contexts},
        {"context_horizon", a.context_horizon},
        {"patch_context", a.patch_context},
        {"patch_horizon", a.patch_horizon},
        {"long_context", a.long_context},
        {"long_horizon", a.long_horizon},
        {"stride", a.stride}}}};
  return j.dump(2);
}

}  // namespace tsdec::cli
