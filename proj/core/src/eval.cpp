#include "tsdec/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <memory>

#include <fmt/format.h>

#include "tsdec/error.hpp"

namespace tsdec {

namespace {

void require_pair(std::span<const double> actual, std::span<const double> predicted, const char* name) {
  if (actual.size() != predicted.size() || actual.empty()) {
    throw DimensionError(fmt::format("{}: expected equal non-empty lengths, got {} and {}", name, actual.size(),
                                     predicted.size()));
  }
}

double mean_abs(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s / static_cast<double>(v.size());
}

}  // namespace

double mse(std::span<const double> actual, std::span<const double> predicted) {
  require_pair(actual, predicted, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += (actual[i] - predicted[i]) * (actual[i] - predicted[i]);
  return s / static_cast<double>(actual.size());
}

std::optional<double> nrmse(std::span<const double> actual, std::span<const double> predicted) {
  require_pair(actual, predicted, "nrmse");
  const double denom = mean_abs(actual);
  if (denom == 0.0) return std::nullopt;
  return std::sqrt(mse(actual, predicted)) / denom;
}

std::optional<double> wape(std::span<const double> actual, std::span<const double> predicted) {
  require_pair(actual, predicted, "wape");
  const double denom = mean_abs(actual);
  if (denom == 0.0) return std::nullopt;
  double s = 0.0;
  for (std::size_t i = 0; i < actual.size(); ++i) s += std::abs(actual[i] - predicted[i]);
  return (s / static_cast<double>(actual.size())) / denom;
}

MetricPair pool_windows(std::span<const WindowRecord> records) {
  MetricPair m;
  m.windows = records.size();
  if (records.empty()) {
    m.nrmse = m.wape = std::numeric_limits<double>::quiet_NaN();
    return m;
  }
  for (const auto& r : records) {
    m.nrmse += r.nrmse;
    m.wape += r.wape;
  }
  m.nrmse /= static_cast<double>(records.size());
  m.wape /= static_cast<double>(records.size());
  return m;
}

EvalReport rolling_eval(const std::vector<TimeSeries>& series, const EvalTask& task, const ForecastFn& forecast,
                        std::string model_name) {
  if (task.horizon < 1 || task.stride < 1 || task.context_len < 1) {
    throw TaskError("rolling_eval: context, horizon and stride must be positive");
  }
  EvalReport report;
  report.model = std::move(model_name);
  report.task = task;
  std::size_t excluded_total = 0;
  for (const TimeSeries& s : series) {
    if (s.size() < 10) continue;
    const SplitSpec split = chronological_split(s.size());
    if (split.test_size() < task.horizon) {
      throw TaskError(fmt::format("rolling_eval: series '{}' has a test period of {} points, shorter than horizon {}",
                                  s.id, split.test_size(), task.horizon));
    }
    const std::size_t first_record = report.windows.size();
    std::size_t excluded = 0;
    for (std::size_t t0 = split.val_end; t0 + task.horizon <= s.size(); t0 += task.stride) {
      const std::size_t begin = t0 > task.context_len ? t0 - task.context_len : 0;
      const auto predicted = forecast(s, begin, t0, task.horizon);
      if (predicted.size() != task.horizon) {
        throw TaskError(fmt::format("rolling_eval: forecaster returned {} values for horizon {}", predicted.size(),
                                    task.horizon));
      }
      const std::span<const double> actual(s.values.data() + t0, task.horizon);
      const auto n = nrmse(actual, predicted);
      const auto w = wape(actual, predicted);
      if (!n || !w) {
        ++excluded;
        continue;
      }
      report.windows.push_back({s.id, t0, *n, *w});
    }
    SeriesMetrics sm{s.id, pool_windows(std::span(report.windows).subspan(first_record))};
    sm.metrics.excluded = excluded;
    excluded_total += excluded;
    report.per_series.push_back(std::move(sm));
  }
  report.pooled = pool_windows(report.windows);
  report.pooled.excluded = excluded_total;
  return report;
}

nlohmann::json EvalReport::to_json() const {
  auto metric = [](const MetricPair& m) {
    return nlohmann::json{{"nrmse", m.nrmse},
                          {"wape", m.wape},
                          {"windows", m.windows},
                          {"excluded_windows", m.excluded},
                          {"aggregation", m.aggregation}};
  };
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : per_series) series.push_back({{"id", s.series_id}, {"metrics", metric(s.metrics)}});
  return {{"model", model},
          {"task",
           {{"dataset", task.dataset}, {"context", task.context_len}, {"horizon", task.horizon}, {"stride", task.stride}}},
          {"pooled", metric(pooled)},
          {"series", series}};
}

std::string EvalReport::summary_csv() const {
  std::string out = "model,dataset,series,context,horizon,windows,excluded,nrmse,wape\n";
  auto row = [&](const std::string& id, const MetricPair& m) {
    out += fmt::format("{},{},{},{},{},{},{},{:.17g},{:.17g}\n", model, task.dataset, id, task.context_len,
                       task.horizon, m.windows, m.excluded, m.nrmse, m.wape);
  };
  row("*", pooled);
  for (const auto& s : per_series) row(s.series_id, s.metrics);
  return out;
}

std::string EvalReport::windows_csv() const {
  std::string out = "series,window_start,nrmse,wape\n";
  for (const auto& w : windows) out += fmt::format("{},{},{:.17g},{:.17g}\n", w.series_id, w.window_start, w.nrmse, w.wape);
  return out;
}

// ---------------------------------------------------------------------------

std::vector<double> repeat_last(std::span<const double> context, std::size_t horizon) {
  if (context.empty()) throw ContextTooShortError("repeat_last: empty context");
  return std::vector<double>(horizon, context.back());
}

SeasonalNaive seasonal_naive(std::span<const double> context, std::size_t season, std::size_t horizon) {
  if (season == 0) throw ContractError("seasonal_naive: season must be positive");
  if (season > context.size()) return {repeat_last(context, horizon), true};
  SeasonalNaive out;
  out.predictions.reserve(horizon);
  const std::size_t base = context.size() - season;
  for (std::size_t i = 0; i < horizon; ++i) out.predictions.push_back(context[base + i % season]);
  return out;
}

ForecastFn repeat_last_fn() {
  return [](const TimeSeries& s, std::size_t begin, std::size_t end, std::size_t horizon) {
    return repeat_last({s.values.data() + begin, end - begin}, horizon);
  };
}

ForecastFn seasonal_naive_fn(std::size_t season) {
  auto warned = std::make_shared<std::atomic<bool>>(false);
  return [season, warned](const TimeSeries& s, std::size_t begin, std::size_t end, std::size_t horizon) {
    auto r = seasonal_naive({s.values.data() + begin, end - begin}, season, horizon);
    if (r.fell_back && !warned->exchange(true)) {
      std::cerr << fmt::format("warning: season {} exceeds context length {}; using repeat-last\n", season, end - begin);
    }
    return r.predictions;
  };
}

ForecastFn model_forecast_fn(const Forecaster& forecaster) {
  return [&forecaster](const TimeSeries& s, std::size_t begin, std::size_t end, std::size_t horizon) {
    ForecastRequest req;
    req.context.assign(s.values.begin() + static_cast<std::ptrdiff_t>(begin),
                       s.values.begin() + static_cast<std::ptrdiff_t>(end));
    req.horizon = horizon;
    const std::size_t r = forecaster.model().config().feature_dim;
    if (r > 0) req.features = features_for(s.timestamp(begin), s.granularity, end - begin + horizon, r);
    return forecaster.forecast(req).predictions;
  };
}

// ---------------------------------------------------------------------------

std::string render_table(const Table& table) {
  std::vector<std::size_t> widths;
  widths.push_back(table.row_header.size());
  for (const auto& [label, _] : table.rows) widths[0] = std::max(widths[0], label.size());
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    std::size_t w = table.columns[c].size();
    for (const auto& [_, cells] : table.rows)
      if (c < cells.size()) w = std::max(w, cells[c].size());
    widths.push_back(w);
  }
  auto line = [&](const std::string& first, const std::vector<std::string>& cells) {
    std::string out = fmt::format("{:<{}}", first, widths[0]);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      out += fmt::format(" | {:>{}}", c < cells.size() ? cells[c] : std::string(), widths[c + 1]);
    }
    return out + "\n";
  };
  std::string out = table.title + "\n";
  out += line(table.row_header, table.columns);
  std::size_t total = widths[0];
  for (std::size_t c = 1; c < widths.size(); ++c) total += widths[c] + 3;
  out += std::string(total, '-') + "\n";
  for (const auto& [label, cells] : table.rows) out += line(label, cells);
  for (const auto& note : table.notes) out += note + "\n";
  return out;
}

std::string table_csv(const Table& table) {
  std::string out = table.row_header;
  for (const auto& c : table.columns) out += "," + c;
  out += "\n";
  for (const auto& [label, cells] : table.rows) {
    out += label;
    for (const auto& c : cells) out += "," + c;
    out += "\n";
  }
  return out;
}

namespace {

std::string cell(double v) { return fmt::format("{:.4f}", v); }

double pooled_nrmse(const Forecaster& f, const std::vector<TimeSeries>& series, std::size_t context,
                    std::size_t horizon, std::size_t stride, const std::string& dataset) {
  return rolling_eval(series, EvalTask{dataset, context, horizon, stride}, model_forecast_fn(f), "model").pooled.nrmse;
}

}  // namespace

ContextSweep variable_context_sweep(const Forecaster& forecaster, const std::vector<TimeSeries>& series,
                                    std::span<const std::size_t> contexts, std::size_t horizon, std::size_t stride) {
  if (contexts.empty()) throw TaskError("variable_context_sweep: no context lengths");
  const std::size_t longest = *std::max_element(contexts.begin(), contexts.end());
  for (const auto& s : series) {
    if (s.size() < 10 || chronological_split(s.size()).val_end < longest || s.size() < longest + horizon) {
      throw TaskError(fmt::format("variable_context_sweep: series '{}' (length {}) cannot supply context {} before "
                                  "its test period",
                                  s.id, s.size(), longest));
    }
  }
  ContextSweep sweep;
  for (std::size_t c : contexts) {
    sweep.contexts.push_back(c);
    sweep.metrics.push_back(
        rolling_eval(series, EvalTask{"sweep", c, horizon, stride}, model_forecast_fn(forecaster), "model").pooled);
  }
  return sweep;
}

Table context_sweep_table(const Forecaster& forecaster, std::span<const AblationDataset> datasets,
                          const AblationSettings& settings, std::vector<ContextSweep>* curves) {
  Table t;
  t.title = fmt::format("NRMSE vs inference context length (horizon {})", settings.context_horizon);
  t.row_header = "dataset";
  for (std::size_t c : settings.contexts) t.columns.push_back(std::to_string(c));
  for (const auto& ds : datasets) {
    const auto sweep =
        variable_context_sweep(forecaster, ds.series, settings.contexts, settings.context_horizon, settings.stride);
    std::vector<std::string> cells;
    for (const auto& m : sweep.metrics) cells.push_back(cell(m.nrmse));
    t.rows.emplace_back(ds.name, std::move(cells));
    if (curves) curves->push_back(sweep);
  }
  return t;
}

Table input_patch_table(std::span<const LabeledModel> models, std::span<const AblationDataset> datasets,
                        const AblationSettings& settings) {
  Table t;
  t.title = fmt::format("NRMSE by input patch length (context {}, horizon {})", settings.patch_context,
                        settings.patch_horizon);
  t.row_header = "dataset";
  for (const auto& m : models) {
    t.columns.push_back(fmt::format("{} (p={})", m.label, m.forecaster->model().config().input_patch_len));
  }
  for (const auto& ds : datasets) {
    std::vector<std::string> cells;
    for (const auto& m : models) {
      cells.push_back(cell(pooled_nrmse(*m.forecaster, ds.series, settings.patch_context, settings.patch_horizon,
                                        settings.stride, ds.name)));
    }
    t.rows.emplace_back(ds.name, std::move(cells));
  }
  return t;
}

Table output_patch_table(std::span<const LabeledModel> models, std::span<const AblationDataset> datasets,
                         const AblationSettings& settings) {
  Table t;
  t.title = fmt::format("NRMSE by output patch length (context {}, horizon {})", settings.long_context,
                        settings.long_horizon);
  t.row_header = "dataset";
  std::vector<std::string> rounds;
  for (const auto& m : models) {
    const std::size_t h = m.forecaster->model().config().output_patch_len;
    t.columns.push_back(fmt::format("{} (h={})", m.label, h));
    rounds.push_back(std::to_string(autoregressive_rounds(settings.long_horizon, h)));
  }
  for (const auto& ds : datasets) {
    std::vector<std::string> cells;
    for (const auto& m : models) {
      cells.push_back(cell(pooled_nrmse(*m.forecaster, ds.series, settings.long_context, settings.long_horizon,
                                        settings.stride, ds.name)));
    }
    t.rows.emplace_back(ds.name, std::move(cells));
  }
  t.rows.emplace_back("rounds", std::move(rounds));
  t.notes.push_back(fmt::format("full-scale reference at horizon 512: h=32 -> {} rounds, h=128 -> {} rounds",
                                autoregressive_rounds(512, 32), autoregressive_rounds(512, 128)));
  return t;
}

}  // namespace tsdec
