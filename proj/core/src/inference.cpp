#include "tsdec/inference.hpp"

#include <algorithm>

#include "tsdec/error.hpp"

namespace tsdec {

std::size_t autoregressive_rounds(std::size_t horizon, std::size_t output_patch_len) {
  if (output_patch_len == 0) throw ContractError("autoregressive_rounds: output patch length must be positive");
  return (horizon + output_patch_len - 1) / output_patch_len;
}

Forecaster::Forecaster(PatchedDecoder model, NormalizationMode normalization)
    : model_(std::move(model)), normalization_(normalization) {}

Forecaster Forecaster::from_checkpoint(const Checkpoint& checkpoint) {
  return Forecaster(PatchedDecoder(checkpoint.config, checkpoint.weights.clone()),
                    checkpoint_normalization(checkpoint));
}

std::size_t Forecaster::capacity() const { return model_.config().max_positions * model_.config().input_patch_len; }

Forecaster::Prepared Forecaster::prepare(const ForecastRequest& request) const {
  const ModelConfig& cfg = model_.config();
  const std::size_t p = cfg.input_patch_len;
  const std::size_t length = request.context.size();
  if (request.horizon < 1) throw RequestError("forecast: horizon must be >= 1");
  if (length < p) {
    throw ContextTooShortError("forecast: context of length " + std::to_string(length) +
                               " is shorter than the input patch length " + std::to_string(p));
  }
  if (request.features) {
    if (request.features->rows != length + request.horizon) {
      throw FeatureError("forecast: expected " + std::to_string(length + request.horizon) +
                         " feature rows (context + horizon), got " + std::to_string(request.features->rows));
    }
    if (cfg.feature_dim > 0 && request.features->cols != cfg.feature_dim) {
      throw FeatureError("forecast: feature width " + std::to_string(request.features->cols) +
                         " does not match the model's " + std::to_string(cfg.feature_dim));
    }
  }

  const std::size_t kept = std::min(length, capacity());
  const std::size_t first = length - kept;
  const std::size_t span = p * (kept / p);
  Prepared out;
  out.scale = normalize_window({request.context.data() + (length - span), span}, normalization_).record;
  out.working.reserve(kept + request.horizon);
  for (std::size_t i = first; i < length; ++i) out.working.push_back(out.scale.apply(request.context[i]));

  if (cfg.feature_dim == 0) {
    out.features = FeatureMatrix(kept + request.horizon, 0);
  } else if (request.features) {
    out.features = request.features->slice(first, length + request.horizon);
  } else {
    out.features = FeatureMatrix(kept + request.horizon, cfg.feature_dim, -1.0);
  }
  return out;
}

std::vector<double> Forecaster::decode(std::vector<double> working, const FeatureMatrix& features,
                                       std::size_t horizon, std::vector<std::size_t>* round_index) const {
  const ModelConfig& cfg = model_.config();
  const std::size_t p = cfg.input_patch_len;
  const std::size_t h = cfg.output_patch_len;
  if (features.rows < working.size() + horizon) {
    throw FeatureError("decode: feature block too short for the requested horizon");
  }
  std::vector<double> out;
  out.reserve(horizon);
  const std::size_t rounds = autoregressive_rounds(horizon, h);
  for (std::size_t round = 0; round < rounds; ++round) {
    const std::size_t total = working.size();
    if (total < p) throw ContextTooShortError("decode: working context shorter than one patch");
    const std::size_t used = std::min(p * (total / p), capacity());
    const std::size_t begin = total - used;
    FeatureMatrix window_features;
    if (cfg.feature_dim > 0) window_features = features.slice(begin, total);
    const Patches patches = patchify({working.data() + begin, used},
                                     cfg.feature_dim > 0 ? &window_features : nullptr, p);
    const Tensor forecasts = model_.forward(patches);
    const std::size_t last = forecasts.dim(0) - 1;
    for (std::size_t k = 0; k < h; ++k) {
      const double v = forecasts.at(last, k);
      working.push_back(v);
      if (out.size() < horizon) {
        out.push_back(v);
        if (round_index) round_index->push_back(round);
      }
    }
  }
  return out;
}

ForecastResult Forecaster::forecast(const ForecastRequest& request) const {
  Prepared prepared = prepare(request);
  ForecastResult result;
  result.scale = prepared.scale;
  const auto normalized = decode(std::move(prepared.working), prepared.features, request.horizon, &result.round_index);
  result.predictions = denormalize(normalized, prepared.scale);
  result.rounds = autoregressive_rounds(request.horizon, model_.config().output_patch_len);
  return result;
}

bool forecast_consistency_probe(const Forecaster& forecaster, const ForecastRequest& request, std::size_t split,
                                ProbeOptions options) {
  const std::size_t h = forecaster.model().config().output_patch_len;
  if (split == 0 || split % h != 0 || split > request.horizon) {
    throw ContractError("consistency probe: split must be a positive multiple of h no larger than the horizon");
  }
  const ForecastResult full = forecaster.forecast(request);

  ForecastRequest shorter = request;
  shorter.horizon = split;
  if (shorter.features) shorter.features = shorter.features->slice(0, request.context.size() + split);
  const ForecastResult head = forecaster.forecast(shorter);
  if (!std::equal(head.predictions.begin(), head.predictions.end(), full.predictions.begin())) return false;
  if (split == request.horizon) return true;

  Forecaster::Prepared prepared = forecaster.prepare(request);
  const std::size_t base = prepared.working.size();
  const auto first_leg = forecaster.decode(prepared.working, prepared.features, split);
  const auto offset = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(options.splice_offset, 0,
                                                                          static_cast<std::ptrdiff_t>(split)));
  std::vector<double> working = prepared.working;
  working.insert(working.end(), first_leg.begin() + static_cast<std::ptrdiff_t>(offset), first_leg.end());
  const FeatureMatrix features = prepared.features.slice(0, base + request.horizon - offset);
  const auto rest = denormalize(forecaster.decode(std::move(working), features, request.horizon - split), prepared.scale);
  return std::equal(rest.begin(), rest.end(), full.predictions.begin() + static_cast<std::ptrdiff_t>(split));
}

}  // namespace tsdec
