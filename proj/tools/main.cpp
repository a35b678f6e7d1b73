// tsdec: pretrain, forecast, evaluate and ablate patched decoder forecasters.

#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace tsdec::cli;
  CLI::App app{"Patched decoder-only time-series forecaster"};
  app.require_subcommand(1);

  PretrainArgs pretrain;
  std::string pretrain_out, pretrain_resume;
  auto* p = app.add_subcommand("pretrain", "Pretrain a model from a config file");
  p->add_option("config", pretrain.config, "Pretrain config (JSON)")->required();
  p->add_option("--output-dir", pretrain_out, "Override the configured output directory");
  p->add_option("--resume", pretrain_resume, "Resume from a training checkpoint");

  ForecastArgs forecast;
  auto* f = app.add_subcommand("forecast", "Forecast every record of a JSONL file");
  f->add_option("--checkpoint", forecast.checkpoint, "Model checkpoint")->required();
  f->add_option("--input", forecast.input, "Input JSONL: {id, context, [start, granularity], [horizon]}")->required();
  f->add_option("--horizon", forecast.horizon, "Horizon for records that do not set one");
  f->add_option("--output-dir", forecast.output_dir, "Output directory")->capture_default_str();
  f->add_option("--output", forecast.output_name, "Output file name inside the output directory")
      ->capture_default_str();

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Rolling-window evaluation against naive baselines");
  e->add_option("--config", evaluate.config, "Evaluate config (JSON)");
  e->add_option("--checkpoint", evaluate.checkpoint, "Model checkpoint");
  e->add_option("--dataset", evaluate.dataset_csv, "Dataset CSV (id,timestamp,value)");
  e->add_option("--granularity", evaluate.granularity, "Granularity of the CSV (inferred when omitted)");
  e->add_option("--context", evaluate.context, "Context length");
  e->add_option("--horizon", evaluate.horizon, "Horizon");
  e->add_option("--stride", evaluate.stride, "Stride between rolling windows");
  e->add_option("--season", evaluate.season, "Season length for the seasonal-naive baseline");
  e->add_option("--output-dir", evaluate.output_dir, "Override the output directory");

  AblateArgs ablate;
  auto* a = app.add_subcommand("ablate", "Context, input-patch and output-patch ablation tables");
  a->add_option("config", ablate.config, "Ablate config (JSON)")->required();
  a->add_option("--suite", ablate.suite, "context | input-patch | output-patch | all");
  a->add_option("--output-dir", ablate.output_dir, "Override the configured output directory");

  app.add_subcommand("defaults", "Print default values of every config section");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? kExitOk : kExitUsage;
  }

  if (*p) {
    if (!pretrain_out.empty()) pretrain.output_dir = pretrain_out;
    if (!pretrain_resume.empty()) pretrain.resume_from = pretrain_resume;
    return cmd_pretrain(pretrain);
  }
  if (*f) return cmd_forecast(forecast);
  if (*e) return cmd_evaluate(evaluate);
  if (*a) return cmd_ablate(ablate);
  std::cout << defaults_json() << "\n";
  return kExitOk;
}
