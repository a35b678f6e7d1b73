#pragma once

// Autoregressive forecasting at arbitrary context and horizon lengths.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "tsdec/checkpoint.hpp"
#include "tsdec/feature_matrix.hpp"
#include "tsdec/model.hpp"
#include "tsdec/training.hpp"

namespace tsdec {

struct ForecastRequest {
  std::vector<double> context;
  // Exactly context.size() + horizon rows when present. Ignored by models
  // without a feature path; absent features read as -1 for models with one.
  std::optional<FeatureMatrix> features;
  std::size_t horizon = 0;
};

struct ForecastResult {
  std::vector<double> predictions;       // exactly `horizon` values
  std::vector<std::size_t> round_index;  // decoding round of each prediction
  std::size_t rounds = 0;
  ScaleRecord scale;
};

// ceil(horizon / output_patch_len).
std::size_t autoregressive_rounds(std::size_t horizon, std::size_t output_patch_len);

// Model plus the normalization it was trained with. Immutable once built; safe
// to share across threads.
class Forecaster {
 public:
  Forecaster(PatchedDecoder model, NormalizationMode normalization);
  static Forecaster from_checkpoint(const Checkpoint& checkpoint);

  const PatchedDecoder& model() const { return model_; }
  NormalizationMode normalization() const { return normalization_; }
  // Longest context the model can attend to: max_positions * p.
  std::size_t capacity() const;

  ForecastResult forecast(const ForecastRequest& request) const;

  // Decoding in normalized space from an explicit working context. `features`
  // holds working.size() + horizon rows (or is empty for models without a
  // feature path). Exposed for the consistency probe.
  std::vector<double> decode(std::vector<double> working, const FeatureMatrix& features, std::size_t horizon,
                             std::vector<std::size_t>* round_index = nullptr) const;

  // Normalized working context and full feature block for a request, after
  // validation and capacity truncation.
  struct Prepared {
    std::vector<double> working;
    FeatureMatrix features;
    ScaleRecord scale;
  };
  Prepared prepare(const ForecastRequest& request) const;

 private:
  PatchedDecoder model_;
  NormalizationMode normalization_;
};

struct ProbeOptions {
  // Shifts the point where the first-leg predictions are spliced onto the
  // working context. Non-zero values model a broken concatenation.
  std::ptrdiff_t splice_offset = 0;
};

// True iff forecast(H) restricted to the first `split` steps equals
// forecast(split) bitwise, and resuming decoding from the working context
// extended with those `split` predictions reproduces steps split+1..H bitwise.
// `split` must be a positive multiple of h and at most H.
bool forecast_consistency_probe(const Forecaster& forecaster, const ForecastRequest& request, std::size_t split,
                                ProbeOptions options = {});

}  // namespace tsdec
