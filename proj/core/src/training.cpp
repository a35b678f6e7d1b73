#include "tsdec/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include <fmt/format.h>

#include "tsdec/error.hpp"

namespace tsdec {

std::string_view to_string(NormalizationMode mode) { return mode == NormalizationMode::kNone ? "none" : "per-window"; }

NormalizationMode parse_normalization(std::string_view name) {
  if (name == "none") return NormalizationMode::kNone;
  if (name == "per-window") return NormalizationMode::kPerWindow;
  throw ConfigError("unknown normalization mode '" + std::string(name) + "' (expected none or per-window)");
}

NormalizedContext normalize_window(std::span<const double> context, NormalizationMode mode) {
  NormalizedContext out{std::vector<double>(context.begin(), context.end()), ScaleRecord{}};
  if (mode == NormalizationMode::kNone || context.empty()) return out;
  const double n = static_cast<double>(context.size());
  double mu = 0.0;
  for (double v : context) mu += v;
  mu /= n;
  double var = 0.0;
  for (double v : context) var += (v - mu) * (v - mu);
  var /= n;
  out.record = ScaleRecord{mu, std::max(std::sqrt(var), kScaleEpsilon)};
  for (double& v : out.values) v = out.record.apply(v);
  return out;
}

std::vector<double> denormalize(std::span<const double> values, const ScaleRecord& record) {
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v = record.invert(v);
  return out;
}

Tensor train_loss(const Tensor& forecasts, const Tensor& targets, std::span<const std::uint8_t> mask) {
  if (forecasts.shape() != targets.shape() || forecasts.rank() != 2) {
    throw DimensionError("train_loss: forecasts " + shape_to_string(forecasts.shape()) + " vs targets " +
                         shape_to_string(targets.shape()));
  }
  const std::size_t tokens = forecasts.dim(0);
  const std::size_t horizon = forecasts.dim(1);
  if (mask.size() != tokens) {
    throw DimensionError("train_loss: mask has " + std::to_string(mask.size()) + " entries for " +
                         std::to_string(tokens) + " tokens");
  }
  const auto active = static_cast<std::size_t>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
  if (active == 0) throw DegenerateBatchError("train_loss: no active tokens in the loss mask");
  std::vector<double> weights(tokens * horizon, 0.0);
  for (std::size_t j = 0; j < tokens; ++j)
    if (mask[j]) std::fill_n(weights.begin() + static_cast<std::ptrdiff_t>(j * horizon), horizon, 1.0);
  Tensor diff = sub(forecasts, targets);
  Tensor weighted = mul(mul(diff, diff), Tensor::from(forecasts.shape(), std::move(weights)));
  return scale(sum(weighted), 1.0 / static_cast<double>(active * horizon));
}

// ---------------------------------------------------------------------------

void TrainConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("train config: " + m); };
  if (!(learning_rate >= 0.0)) fail("learning_rate must be >= 0");
  if (total_steps < 1) fail("total_steps must be >= 1");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (warmup_fraction < 0.0 || warmup_fraction > 1.0) fail("warmup_fraction must be in [0, 1]");
  if (clip_norm < 0.0) fail("clip_norm must be >= 0");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0) fail("betas must be in [0, 1)");
  if (eval_every < 1) fail("eval_every must be >= 1");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate},
                     {"warmup_fraction", c.warmup_fraction},
                     {"cosine_decay", c.cosine_decay},
                     {"batch_size", c.batch_size},
                     {"total_steps", c.total_steps},
                     {"clip_norm", c.clip_norm},
                     {"beta1", c.beta1},
                     {"beta2", c.beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"seed", c.seed},
                     {"normalization", to_string(c.normalization)},
                     {"checkpoint_every", c.checkpoint_every},
                     {"eval_every", c.eval_every},
                     {"val_windows", c.val_windows}};
  if (c.mixture) j["mixture"] = *c.mixture;
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  static const std::set<std::string> known = {
      "learning_rate", "warmup_fraction", "cosine_decay", "batch_size", "total_steps",
      "clip_norm",     "beta1",           "beta2",        "adam_epsilon", "seed",
      "normalization", "checkpoint_every", "eval_every",  "val_windows", "mixture"};
  if (!j.is_object()) throw ConfigError("train config: expected an object");
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError("train config: unknown key '" + key + "'");
  auto read = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  read("learning_rate", c.learning_rate);
  read("warmup_fraction", c.warmup_fraction);
  read("cosine_decay", c.cosine_decay);
  read("batch_size", c.batch_size);
  read("total_steps", c.total_steps);
  read("clip_norm", c.clip_norm);
  read("beta1", c.beta1);
  read("beta2", c.beta2);
  read("adam_epsilon", c.adam_epsilon);
  read("seed", c.seed);
  if (j.contains("normalization")) c.normalization = parse_normalization(j.at("normalization").get<std::string>());
  read("checkpoint_every", c.checkpoint_every);
  read("eval_every", c.eval_every);
  read("val_windows", c.val_windows);
  if (j.contains("mixture")) c.mixture = j.at("mixture").get<MixtureConfig>();
}

double learning_rate_at(const TrainConfig& config, std::size_t step) {
  const auto warmup = static_cast<std::size_t>(std::ceil(config.warmup_fraction * static_cast<double>(config.total_steps)));
  if (step < warmup) return config.learning_rate * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (!config.cosine_decay) return config.learning_rate;
  const double span = static_cast<double>(std::max<std::size_t>(1, config.total_steps - warmup));
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / span);
  return config.learning_rate * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

OptimizerState OptimizerState::for_parameters(std::span<const NamedTensor> params) {
  OptimizerState s;
  for (const auto& p : params) {
    s.first_moment.emplace_back(p.tensor.numel(), 0.0);
    s.second_moment.emplace_back(p.tensor.numel(), 0.0);
  }
  return s;
}

AdamStepReport adam_step(std::span<const NamedTensor> params, OptimizerState& state, const AdamSettings& settings) {
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw DimensionError("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                         " parameters, got " + std::to_string(params.size()));
  }
  std::vector<std::vector<double>> grads;
  grads.reserve(params.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (state.first_moment[i].size() != params[i].tensor.numel()) {
      throw DimensionError("adam_step: state shape mismatch for '" + params[i].name + "'");
    }
    grads.push_back(params[i].tensor.grad());
    for (double g : grads.back()) {
      if (!std::isfinite(g)) throw NumericError("adam_step: non-finite gradient in parameter '" + params[i].name + "'");
      sq += g * g;
    }
  }
  AdamStepReport report;
  report.grad_norm = std::sqrt(sq);
  if (settings.clip_norm > 0.0 && report.grad_norm > settings.clip_norm) {
    report.clip_scale = settings.clip_norm / report.grad_norm;
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(settings.beta1, t);
  const double correction2 = 1.0 - std::pow(settings.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor tensor = params[i].tensor;
    auto w = tensor.mutable_data();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double g = grads[i][k] * report.clip_scale;
      m[k] = settings.beta1 * m[k] + (1.0 - settings.beta1) * g;
      v[k] = settings.beta2 * v[k] + (1.0 - settings.beta2) * g * g;
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      w[k] -= settings.learning_rate * m_hat / (std::sqrt(v_hat) + settings.epsilon);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------

WindowBatchItem assemble_window(const TimeSeries& series, const TrainingWindow& window, const ModelConfig& config,
                                NormalizationMode mode) {
  const std::size_t p = config.input_patch_len;
  const std::size_t h = config.output_patch_len;
  if (window.start + window.length > series.size() || window.num_tokens == 0) {
    throw ContractError("assemble_window: window exceeds series '" + series.id + "'");
  }
  const auto* base = series.values.data() + window.start;

  // Statistics come from the span the last active token conditions on. Tokens
  // after it carry no loss and cannot influence earlier ones, so they are cut.
  std::size_t last_active = 0;
  for (std::size_t j = 0; j < window.num_tokens; ++j)
    if (window.loss_mask[j]) last_active = j;
  const std::size_t tokens = last_active + 1;
  const std::size_t input_len = tokens * p;
  const ScaleRecord record = normalize_window({base, input_len}, mode).record;

  std::vector<double> inputs(base, base + input_len);
  for (double& v : inputs) v = record.apply(v);
  FeatureMatrix features = features_for(series.timestamp(window.start), series.granularity, input_len,
                                        config.feature_dim);
  const Patches patches = patchify(inputs, config.feature_dim ? &features : nullptr, p);

  std::vector<double> targets(tokens * h, 0.0);
  for (std::size_t j = 0; j < tokens; ++j) {
    if (!window.loss_mask[j]) continue;
    for (std::size_t k = 0; k < h; ++k) targets[j * h + k] = record.apply(base[p * (j + 1) + k]);
  }
  std::vector<std::uint8_t> mask(window.loss_mask.begin(), window.loss_mask.begin() + static_cast<std::ptrdiff_t>(tokens));
  return WindowBatchItem{patches.flattened(), Tensor::from({tokens, h}, std::move(targets)), std::move(mask),
                         record};
}

Tensor batch_loss(const PatchedDecoder& model, const std::vector<TimeSeries>& corpus,
                  std::vector<TrainingWindow> windows, NormalizationMode mode, ForwardContext ctx) {
  if (windows.empty()) throw DegenerateBatchError("batch_loss: empty batch");
  std::stable_sort(windows.begin(), windows.end(), [](const TrainingWindow& a, const TrainingWindow& b) {
    return std::tie(a.series_index, a.start, a.length) < std::tie(b.series_index, b.start, b.length);
  });
  std::vector<Tensor> losses;
  losses.reserve(windows.size());
  for (const auto& w : windows) {
    const WindowBatchItem item = assemble_window(corpus.at(w.series_index), w, model.config(), mode);
    losses.push_back(reshape(train_loss(model.forward(item.patch_matrix, ctx), item.targets, item.mask), {1, 1}));
  }
  return mean(concat_rows(losses));
}

std::vector<TrainingWindow> validation_windows(const std::vector<TimeSeries>& corpus, const MixtureConfig& mixture,
                                               const ModelConfig& config, std::size_t limit) {
  std::vector<TrainingWindow> out;
  const std::size_t p = config.input_patch_len;
  const std::size_t h = config.output_patch_len;
  for (std::size_t i = 0; i < corpus.size() && out.size() < limit; ++i) {
    const auto& s = corpus[i];
    if (s.size() < 10) continue;
    const std::size_t end = chronological_split(s.size()).val_end;
    const std::size_t length = std::min(mixture.context_cap(s.granularity) + h, end);
    if (length < p + h) continue;
    out.push_back(make_window(i, end - length, length, p, h));
  }
  return out;
}

double evaluate_loss(const PatchedDecoder& model, const std::vector<TimeSeries>& corpus,
                     const std::vector<TrainingWindow>& windows, NormalizationMode mode) {
  if (windows.empty()) return std::numeric_limits<double>::quiet_NaN();
  return batch_loss(model, corpus, windows, mode).item();
}

std::string loss_curve_csv(std::span<const LossPoint> curve) {
  std::string out = "step,train_loss,val_loss\n";
  for (const auto& p : curve) {
    out += fmt::format("{},{:.17g},{}\n", p.step, p.train_loss, p.val_loss ? fmt::format("{:.17g}", *p.val_loss) : "");
  }
  return out;
}

// ---------------------------------------------------------------------------

Checkpoint make_training_checkpoint(const PatchedDecoder& model, const TrainConfig& config,
                                    const OptimizerState& optimizer) {
  Checkpoint ck;
  ck.config = model.config();
  ck.weights = model.weights().clone();
  ck.metadata = {{"normalization", to_string(config.normalization)}, {"train_config", config}, {"step", optimizer.step}};
  const auto params = model.weights().parameters();
  for (std::size_t i = 0; i < params.size() && i < optimizer.first_moment.size(); ++i) {
    ck.extra.push_back({"optimizer.m/" + params[i].name, params[i].tensor.shape(), optimizer.first_moment[i]});
    ck.extra.push_back({"optimizer.v/" + params[i].name, params[i].tensor.shape(), optimizer.second_moment[i]});
  }
  return ck;
}

NormalizationMode checkpoint_normalization(const Checkpoint& checkpoint) {
  return parse_normalization(checkpoint.metadata.value("normalization", std::string("none")));
}

namespace {

std::uint64_t step_seed(std::uint64_t seed, std::uint64_t step) {
  // splitmix64 over the pair.
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + step + 0x632BE59BD9B4E019ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

OptimizerState restore_optimizer(const Checkpoint& ck, std::span<const NamedTensor> params) {
  OptimizerState s = OptimizerState::for_parameters(params);
  s.step = ck.metadata.value("step", std::size_t{0});
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto* m = ck.find_extra("optimizer.m/" + params[i].name);
    const auto* v = ck.find_extra("optimizer.v/" + params[i].name);
    if (!m || !v) throw CheckpointError("resume: checkpoint lacks optimizer state for '" + params[i].name + "'");
    s.first_moment[i] = m->data;
    s.second_moment[i] = v->data;
  }
  return s;
}

}  // namespace

TrainResult train(const std::vector<TimeSeries>& corpus, const ModelConfig& model_config,
                  const TrainConfig& train_config, const TrainOptions& options) {
  model_config.validate();
  train_config.validate();
  if (corpus.empty()) throw ConfigError("train: corpus is empty");
  MixtureConfig mixture = train_config.mixture ? *train_config.mixture : MixtureConfig::uniform_over(corpus);
  // Context caps never exceed what the model can attend over.
  const std::size_t capacity = model_config.max_positions * model_config.input_patch_len;
  for (const auto& [g, w] : mixture.weights) mixture.max_context[g] = std::min(mixture.context_cap(g), capacity);

  std::optional<PatchedDecoder> model;
  OptimizerState optimizer;
  if (options.resume_from) {
    Checkpoint ck = load_checkpoint(*options.resume_from);
    if (!(ck.config == model_config)) throw ConfigError("resume: checkpoint model config differs from the requested one");
    model.emplace(ck.config, std::move(ck.weights));
    optimizer = restore_optimizer(ck, model->weights().parameters());
  } else {
    model.emplace(model_config, ModelWeights::initialize(model_config, options.init_seed));
    optimizer = OptimizerState::for_parameters(model->weights().parameters());
  }
  const auto params = model->weights().parameters();
  const auto val = validation_windows(corpus, mixture, model_config, train_config.val_windows);

  TrainResult result{*model, {}, {}, {}};
  std::optional<std::filesystem::path> ckpt_dir;
  if (options.output_dir) {
    ckpt_dir = *options.output_dir / "checkpoints";
    std::filesystem::create_directories(*ckpt_dir);
  }
  std::optional<std::filesystem::path> last_good = options.resume_from;
  auto write_checkpoint = [&](const std::filesystem::path& path) {
    save_checkpoint(path, make_training_checkpoint(*model, train_config, optimizer));
    result.checkpoints.push_back(path);
    last_good = path;
  };

  const AdamSettings base{train_config.learning_rate, train_config.beta1, train_config.beta2,
                          train_config.adam_epsilon, train_config.clip_norm};
  const std::size_t begin = optimizer.step;
  std::size_t end = train_config.total_steps;
  if (options.stop_after) end = std::min(end, begin + *options.stop_after);

  for (std::size_t step = begin; step < end; ++step) {
    std::mt19937_64 rng(step_seed(train_config.seed, step));
    const auto windows = sample_training_windows(corpus, mixture, train_config.batch_size,
                                                 model_config.input_patch_len, model_config.output_patch_len, rng);
    LossPoint point{step, 0.0, std::nullopt};
    try {
      Tape tape;
      TapeScope scope(tape);
      ForwardContext ctx{model_config.dropout > 0.0 ? &rng : nullptr};
      Tensor loss = batch_loss(*model, corpus, windows, train_config.normalization, ctx);
      point.train_loss = loss.item();
      backward(loss);
      AdamSettings settings = base;
      settings.learning_rate = learning_rate_at(train_config, step);
      adam_step(params, optimizer, settings);
      for (const auto& p : params) Tensor(p.tensor).zero_grad();
      const bool last = step + 1 == train_config.total_steps;
      if (step % train_config.eval_every == 0 || last) {
        point.val_loss = evaluate_loss(*model, corpus, val, train_config.normalization);
      }
    } catch (const NumericError& e) {
      throw DivergenceError(fmt::format("train: diverged at step {} ({}); last good checkpoint: {}", step, e.what(),
                                        last_good ? last_good->string() : std::string("none")));
    }
    result.curve.push_back(point);
    if (options.on_step) options.on_step(point);
    if (ckpt_dir && train_config.checkpoint_every > 0 && (step + 1) % train_config.checkpoint_every == 0) {
      write_checkpoint(*ckpt_dir / fmt::format("step_{:07d}.ckpt", step + 1));
    }
  }

  if (options.output_dir) {
    write_checkpoint(*options.output_dir / "model.ckpt");
    const std::filesystem::path csv = *options.output_dir / "loss.csv";
    const bool append = options.resume_from && std::filesystem::exists(csv);
    std::ofstream out(csv, append ? std::ios::app : std::ios::trunc);
    std::string text = loss_curve_csv(result.curve);
    if (append) text = text.substr(text.find('\n') + 1);
    out << text;
  }
  result.model = std::move(*model);
  result.optimizer = std::move(optimizer);
  return result;
}

}  // namespace tsdec
