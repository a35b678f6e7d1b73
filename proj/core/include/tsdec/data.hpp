#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tsdec/feature_matrix.hpp"

namespace tsdec {

enum class Granularity { kMinutes15, kHourly, kDaily, kWeekly, kMonthly };

inline constexpr Granularity kAllGranularities[] = {Granularity::kMinutes15, Granularity::kHourly,
                                                    Granularity::kDaily, Granularity::kWeekly,
                                                    Granularity::kMonthly};

std::string_view to_string(Granularity g);
// Accepts "15min", "hourly", "daily", "weekly", "monthly".
Granularity parse_granularity(std::string_view name);

using Timestamp = std::chrono::sys_seconds;

// "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS]" or with a space separator; a trailing
// "Z" is accepted. Throws ParseError.
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

// start + steps strides. Monthly strides move the calendar month and keep the
// day of month; a day that does not exist in the target month raises
// CalendarError.
Timestamp advance(Timestamp start, Granularity g, std::int64_t steps);

struct TimeSeries {
  std::string id;
  Granularity granularity = Granularity::kDaily;
  Timestamp start{};
  std::vector<double> values;
  bool log_transform = false;

  std::size_t size() const { return values.size(); }
  Timestamp timestamp(std::size_t index) const { return advance(start, granularity, static_cast<std::int64_t>(index)); }
};

// ---------------------------------------------------------------------------
// Date-derived features: columns (month-of-year, day-of-week, hour-of-day,
// minute-of-hour, second-of-minute). A raw value v with period P maps to
// v/P - 0.5; columns finer than the granularity are -1.

inline constexpr std::size_t kDateFeatureDim = 5;
inline constexpr double kMaskedFeature = -1.0;

enum DateFeatureColumn : std::size_t { kMonthOfYear = 0, kDayOfWeek, kHourOfDay, kMinuteOfHour, kSecondOfMinute };

using DateFeatures = FeatureMatrix;

DateFeatures derive_date_features(Timestamp start, Granularity g, std::size_t length);
// Row for one instant, used when extending features into the horizon.
std::vector<double> date_feature_row(Timestamp t, Granularity g);
// Feature block of width `feature_dim` covering `length` steps. feature_dim 0
// yields an empty matrix; 5 yields derive_date_features.
FeatureMatrix features_for(Timestamp start, Granularity g, std::size_t length, std::size_t feature_dim);

// ---------------------------------------------------------------------------
// CSV ingestion. Columns: id,timestamp,value (ISO-8601 timestamps). A header
// row is detected and skipped.

struct CsvSchema {
  std::optional<Granularity> granularity;  // inferred from the first stride when unset
  bool log_transform = false;              // store log(1 + value)
};

struct SkippedSeries {
  std::string id;
  std::string reason;
};

struct IngestResult {
  std::vector<TimeSeries> series;
  std::vector<SkippedSeries> skipped;
};

// Series with gaps (a stride that is a whole multiple of the granularity) or
// NaN values are skipped and reported. A stride that is not a multiple of the
// declared granularity raises StrideError; malformed rows raise ParseError
// with the line number.
IngestResult ingest_csv(const std::filesystem::path& path, const CsvSchema& schema = {});
void write_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series);

// ---------------------------------------------------------------------------
// Synthetic corpus.

struct Band {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Band&) const = default;
};

enum class FamilyRole { kPretrain, kHoldout };

// Parameter ranges for one pattern family. Holdout families must not overlap
// any pretrain family in period or slope-magnitude bands.
struct PatternFamily {
  std::string name;
  FamilyRole role = FamilyRole::kPretrain;
  std::vector<Band> period_bands;           // sinusoid periods, in steps
  std::pair<std::size_t, std::size_t> sinusoids{1, 2};  // inclusive count range
  Band slope_band{0.0, 0.0};                // |slope| per step, relative to amplitude
  double piecewise_trend_prob = 0.0;        // chance of one slope change
  double seasonal_dummy_prob = 0.0;         // chance of adding a repeating profile
  std::vector<std::size_t> dummy_periods;   // candidates for the profile period
  double noise_level = 0.1;                 // noise std relative to amplitude
  Band level_band{0.0, 0.0};                // additive level
  Band scale_band{1.0, 1.0};                // overall amplitude multiplier
};

struct SyntheticGroup {
  Granularity granularity = Granularity::kDaily;
  std::size_t count = 0;
  std::size_t length_min = 0;
  std::size_t length_max = 0;
  std::string family;
};

struct SyntheticCorpusSpec {
  std::vector<PatternFamily> families;
  std::vector<SyntheticGroup> groups;
  std::string start = "2015-01-01T00:00:00";

  void validate() const;  // throws ConfigError
  const PatternFamily& family(const std::string& name) const;
};

void to_json(nlohmann::json& j, const SyntheticCorpusSpec& spec);
void from_json(const nlohmann::json& j, SyntheticCorpusSpec& spec);

// Deterministic in (spec, seed). Series ids are "<family>-<granularity>-<k>".
std::vector<TimeSeries> synth_corpus(const SyntheticCorpusSpec& spec, std::uint64_t seed);

// Series of the named family only.
std::vector<TimeSeries> filter_family(const std::vector<TimeSeries>& corpus, const std::string& family);

// ---------------------------------------------------------------------------
// Chronological 7:1:2 split: train [0, train_end), validation [train_end,
// val_end), test [val_end, length), with train_end = floor(0.7 T) and
// val_end = floor(0.8 T).

struct SplitSpec {
  std::size_t length = 0;
  std::size_t train_end = 0;
  std::size_t val_end = 0;

  std::size_t train_size() const { return train_end; }
  std::size_t val_size() const { return val_end - train_end; }
  std::size_t test_size() const { return length - val_end; }
};

SplitSpec chronological_split(std::size_t length);

// ---------------------------------------------------------------------------
// Training windows.

struct MixtureConfig {
  std::map<Granularity, double> weights;     // must sum to 1
  std::map<Granularity, std::size_t> max_context;

  // Equal weight over the granularities present in `corpus`; per-granularity
  // context caps 512 (sub-daily and daily), 256 (weekly), 64 (monthly).
  static MixtureConfig uniform_over(const std::vector<TimeSeries>& corpus);
  static std::size_t default_max_context(Granularity g);
  std::size_t context_cap(Granularity g) const;
};

void to_json(nlohmann::json& j, const MixtureConfig& m);
void from_json(const nlohmann::json& j, MixtureConfig& m);

// A slice [start, start + length) of one series. Token j (0-based) sees
// patches 0..j and is trained on values [p(j+1), p(j+1) + h) of the window; it
// is active only when that span lies inside the window.
struct TrainingWindow {
  std::size_t series_index = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  std::size_t num_tokens = 0;
  std::vector<std::uint8_t> loss_mask;

  std::size_t active_tokens() const;
  bool operator==(const TrainingWindow&) const = default;
};

TrainingWindow make_window(std::size_t series_index, std::size_t start, std::size_t length, std::size_t patch_len,
                           std::size_t horizon_len);

// Draws a granularity from the mixture, a series uniformly among eligible
// series of that granularity (train split holds at least p + h points), and a
// start uniformly inside the train split. Window length = min(cap + h, train
// split length).
std::vector<TrainingWindow> sample_training_windows(const std::vector<TimeSeries>& corpus, const MixtureConfig& mixture,
                                                    std::size_t batch_size, std::size_t patch_len,
                                                    std::size_t horizon_len, std::mt19937_64& rng);

// Corpus manifest: ids, granularity, lengths, split boundaries.
nlohmann::json corpus_manifest(const std::vector<TimeSeries>& corpus);

}  // namespace tsdec
