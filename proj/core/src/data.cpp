#include "tsdec/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "tsdec/error.hpp"

namespace tsdec {

using namespace std::chrono;

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::kMinutes15: return "15min";
    case Granularity::kHourly: return "hourly";
    case Granularity::kDaily: return "daily";
    case Granularity::kWeekly: return "weekly";
    case Granularity::kMonthly: return "monthly";
  }
  return "unknown";
}

Granularity parse_granularity(std::string_view name) {
  for (Granularity g : kAllGranularities)
    if (to_string(g) == name) return g;
  throw ConfigError("unknown granularity '" + std::string(name) + "' (expected 15min, hourly, daily, weekly, monthly)");
}

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  int v = 0;
  if (pos + len > text.size()) throw ParseError("bad timestamp '" + std::string(whole) + "'");
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, v);
  if (ec != std::errc() || ptr != text.data() + pos + len) throw ParseError("bad timestamp '" + std::string(whole) + "'");
  return v;
}

seconds fixed_stride(Granularity g) {
  switch (g) {
    case Granularity::kMinutes15: return minutes(15);
    case Granularity::kHourly: return hours(1);
    case Granularity::kDaily: return days(1);
    case Granularity::kWeekly: return weeks(1);
    case Granularity::kMonthly: break;
  }
  return seconds(0);
}

struct CalendarParts {
  year_month_day ymd;
  seconds time_of_day;
};

CalendarParts split(Timestamp t) {
  const sys_days day = floor<days>(t);
  return {year_month_day(day), t - day};
}

// Whole months between a and b when b is exactly a calendar-month multiple of
// a (same day and time of day), otherwise nullopt.
std::optional<std::int64_t> month_steps(Timestamp a, Timestamp b) {
  const auto pa = split(a);
  const auto pb = split(b);
  if (pa.ymd.day() != pb.ymd.day() || pa.time_of_day != pb.time_of_day) return std::nullopt;
  const auto diff = (pb.ymd.year() / pb.ymd.month()) - (pa.ymd.year() / pa.ymd.month());
  return diff.count();
}

}  // namespace

Timestamp parse_timestamp(std::string_view text) {
  std::string_view s = text;
  while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') throw ParseError("bad timestamp '" + std::string(text) + "'");
  const int y = parse_int(s, 0, 4, text);
  const int mo = parse_int(s, 5, 2, text);
  const int d = parse_int(s, 8, 2, text);
  int hh = 0, mi = 0, ss = 0;
  if (s.size() > 10) {
    if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || s[13] != ':') {
      throw ParseError("bad timestamp '" + std::string(text) + "'");
    }
    hh = parse_int(s, 11, 2, text);
    mi = parse_int(s, 14, 2, text);
    if (s.size() > 16) {
      if (s.size() != 19 || s[16] != ':') throw ParseError("bad timestamp '" + std::string(text) + "'");
      ss = parse_int(s, 17, 2, text);
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || hh > 23 || mi > 59 || ss > 59) throw ParseError("invalid calendar date '" + std::string(text) + "'");
  return sys_days(ymd) + hours(hh) + minutes(mi) + seconds(ss);
}

std::string format_timestamp(Timestamp t) {
  const auto p = split(t);
  const hh_mm_ss<seconds> tod(p.time_of_day);
  return fmt::format("{:04d}-{:02d}-{:02d}T{:02d}:{:02d}:{:02d}", static_cast<int>(p.ymd.year()),
                     static_cast<unsigned>(p.ymd.month()), static_cast<unsigned>(p.ymd.day()), tod.hours().count(),
                     tod.minutes().count(), tod.seconds().count());
}

Timestamp advance(Timestamp start, Granularity g, std::int64_t steps) {
  if (g != Granularity::kMonthly) return start + fixed_stride(g) * steps;
  const auto p = split(start);
  const year_month ym = p.ymd.year() / p.ymd.month() + months(steps);
  const year_month_day target = ym / p.ymd.day();
  if (!target.ok()) {
    throw CalendarError("monthly stride from " + format_timestamp(start) + " lands on a day that does not exist");
  }
  return sys_days(target) + p.time_of_day;
}

// ---------------------------------------------------------------------------

std::vector<double> date_feature_row(Timestamp t, Granularity g) {
  const auto p = split(t);
  const hh_mm_ss<seconds> tod(p.time_of_day);
  const unsigned monday_based = (weekday(sys_days(p.ymd)).c_encoding() + 6) % 7;
  std::vector<double> row(kDateFeatureDim, kMaskedFeature);
  row[kMonthOfYear] = (static_cast<unsigned>(p.ymd.month()) - 1) / 12.0 - 0.5;
  if (g != Granularity::kMonthly) row[kDayOfWeek] = monday_based / 7.0 - 0.5;
  if (g == Granularity::kMinutes15 || g == Granularity::kHourly) row[kHourOfDay] = tod.hours().count() / 24.0 - 0.5;
  if (g == Granularity::kMinutes15) row[kMinuteOfHour] = tod.minutes().count() / 60.0 - 0.5;
  // No supported granularity is fine enough for the second-of-minute column.
  return row;
}

DateFeatures derive_date_features(Timestamp start, Granularity g, std::size_t length) {
  DateFeatures out(length, kDateFeatureDim);
  for (std::size_t i = 0; i < length; ++i) {
    const auto row = date_feature_row(advance(start, g, static_cast<std::int64_t>(i)), g);
    std::copy(row.begin(), row.end(), out.data.begin() + static_cast<std::ptrdiff_t>(i * kDateFeatureDim));
  }
  return out;
}

FeatureMatrix features_for(Timestamp start, Granularity g, std::size_t length, std::size_t feature_dim) {
  if (feature_dim == 0) return FeatureMatrix(length, 0);
  if (feature_dim != kDateFeatureDim) {
    throw FeatureError("date features have width " + std::to_string(kDateFeatureDim) + ", model expects " +
                       std::to_string(feature_dim));
  }
  return derive_date_features(start, g, length);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t comma = line.find(',', begin);
    out.push_back(line.substr(begin, comma == std::string_view::npos ? std::string_view::npos : comma - begin));
    if (comma == std::string_view::npos) break;
    begin = comma + 1;
  }
  for (auto& f : out) {
    while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
    while (!f.empty() && (f.back() == ' ' || f.back() == '"' || f.back() == '\r')) f.remove_suffix(1);
  }
  return out;
}

std::optional<double> parse_value(std::string_view text) {
  if (text.empty() || text == "nan" || text == "NaN" || text == "NA" || text == "null") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(std::string(text), &used);
    if (used != text.size()) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

Granularity infer_granularity(const std::string& id, Timestamp a, Timestamp b) {
  const seconds delta = b - a;
  for (Granularity g : {Granularity::kMinutes15, Granularity::kHourly, Granularity::kDaily, Granularity::kWeekly}) {
    if (delta == fixed_stride(g)) return g;
  }
  if (month_steps(a, b) == 1) return Granularity::kMonthly;
  throw StrideError("series '" + id + "': stride of " + std::to_string(delta.count()) +
                    "s does not match a supported granularity");
}

// Number of strides from a to b, nullopt when not a whole multiple.
std::optional<std::int64_t> stride_count(Timestamp a, Timestamp b, Granularity g) {
  if (g == Granularity::kMonthly) return month_steps(a, b);
  const auto stride = fixed_stride(g).count();
  const auto delta = (b - a).count();
  if (delta % stride != 0) return std::nullopt;
  return delta / stride;
}

struct RawSeries {
  std::vector<Timestamp> times;
  std::vector<double> values;
};

}  // namespace

IngestResult ingest_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open CSV file " + path.string());

  std::vector<std::string> order;
  std::unordered_map<std::string, RawSeries> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3) {
      throw ParseError(fmt::format("{}:{}: expected 3 columns (id,timestamp,value), got {}", path.string(), line_no,
                                   fields.size()));
    }
    const auto value = parse_value(fields[2]);
    if (!value) {
      if (line_no == 1) continue;  // header
      throw ParseError(fmt::format("{}:{}: unparseable value '{}'", path.string(), line_no, fields[2]));
    }
    Timestamp t;
    try {
      t = parse_timestamp(fields[1]);
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
    std::string id(fields[0]);
    auto [it, inserted] = raw.try_emplace(id);
    if (inserted) order.push_back(id);
    it->second.times.push_back(t);
    it->second.values.push_back(*value);
  }

  IngestResult result;
  for (const std::string& id : order) {
    RawSeries& r = raw.at(id);
    if (r.times.size() < 2) {
      result.skipped.push_back({id, "fewer than 2 values"});
      continue;
    }
    for (std::size_t i = 1; i < r.times.size(); ++i) {
      if (r.times[i] <= r.times[i - 1]) {
        throw StrideError("series '" + id + "': timestamps are not strictly increasing at " +
                          format_timestamp(r.times[i]));
      }
    }
    const Granularity g = schema.granularity ? *schema.granularity : infer_granularity(id, r.times[0], r.times[1]);
    std::optional<std::string> gap;
    for (std::size_t i = 1; i < r.times.size() && !gap; ++i) {
      const auto steps = stride_count(r.times[i - 1], r.times[i], g);
      if (!steps || *steps < 1) {
        throw StrideError("series '" + id + "': stride between " + format_timestamp(r.times[i - 1]) + " and " +
                          format_timestamp(r.times[i]) + " is inconsistent with " + std::string(to_string(g)));
      }
      if (*steps > 1) gap = "missing timestamp after " + format_timestamp(r.times[i - 1]);
    }
    if (gap) {
      result.skipped.push_back({id, *gap});
      continue;
    }
    TimeSeries s{id, g, r.times[0], std::move(r.values), schema.log_transform};
    if (s.log_transform) {
      for (double& v : s.values) v = std::log1p(v);
    }
    if (std::any_of(s.values.begin(), s.values.end(), [](double v) { return !std::isfinite(v); })) {
      result.skipped.push_back({id, "missing or non-finite values"});
      continue;
    }
    result.series.push_back(std::move(s));
  }
  return result;
}

void write_csv(const std::filesystem::path& path, const std::vector<TimeSeries>& series) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write CSV file " + path.string());
  out << "id,timestamp,value\n";
  for (const TimeSeries& s : series) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      out << s.id << ',' << format_timestamp(s.timestamp(i)) << ',' << fmt::format("{:.17g}", s.values[i]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

bool overlaps(const Band& a, const Band& b) { return a.lo <= b.hi && b.lo <= a.hi; }

std::string_view role_name(FamilyRole r) { return r == FamilyRole::kPretrain ? "pretrain" : "holdout"; }

template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.contains(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

Band band_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("band must be a [lo, hi] pair");
  Band b{j[0].get<double>(), j[1].get<double>()};
  if (b.lo > b.hi) throw ConfigError("band lower bound exceeds upper bound");
  return b;
}

nlohmann::json band_to_json(const Band& b) { return nlohmann::json::array({b.lo, b.hi}); }

}  // namespace

const PatternFamily& SyntheticCorpusSpec::family(const std::string& name) const {
  for (const auto& f : families)
    if (f.name == name) return f;
  throw ConfigError("corpus spec: unknown family '" + name + "'");
}

void SyntheticCorpusSpec::validate() const {
  if (groups.empty() || families.empty()) throw ConfigError("corpus spec: empty spec (no groups or families)");
  std::size_t total = 0;
  for (const auto& g : groups) {
    family(g.family);
    if (g.length_min < 2 || g.length_min > g.length_max) {
      throw ConfigError("corpus spec: group '" + g.family + "' needs 2 <= length_min <= length_max");
    }
    total += g.count;
  }
  if (total == 0) throw ConfigError("corpus spec: empty spec (zero series requested)");
  for (const auto& f : families) {
    if (f.period_bands.empty()) throw ConfigError("corpus spec: family '" + f.name + "' has no period bands");
    for (const auto& b : f.period_bands)
      if (b.lo < 2.0) throw ConfigError("corpus spec: family '" + f.name + "' has a period below 2 steps");
    if (f.sinusoids.first < 1 || f.sinusoids.first > f.sinusoids.second) {
      throw ConfigError("corpus spec: family '" + f.name + "' has an invalid sinusoid count range");
    }
    if (f.seasonal_dummy_prob > 0.0 && f.dummy_periods.empty()) {
      throw ConfigError("corpus spec: family '" + f.name + "' enables seasonal dummies without periods");
    }
  }
  for (const auto& held : families) {
    if (held.role != FamilyRole::kHoldout) continue;
    for (const auto& pre : families) {
      if (pre.role != FamilyRole::kPretrain) continue;
      for (const auto& hb : held.period_bands)
        for (const auto& pb : pre.period_bands)
          if (overlaps(hb, pb)) {
            throw ConfigError("corpus spec: holdout family '" + held.name + "' period band overlaps pretrain family '" +
                              pre.name + "'");
          }
      const bool slopes_set = held.slope_band.hi > 0.0 && pre.slope_band.hi > 0.0;
      if (slopes_set && overlaps(held.slope_band, pre.slope_band)) {
        throw ConfigError("corpus spec: holdout family '" + held.name + "' slope band overlaps pretrain family '" +
                          pre.name + "'");
      }
    }
  }
}

void to_json(nlohmann::json& j, const SyntheticCorpusSpec& spec) {
  nlohmann::json families = nlohmann::json::array();
  for (const auto& f : spec.families) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : f.period_bands) bands.push_back(band_to_json(b));
    families.push_back({{"name", f.name},
                        {"role", role_name(f.role)},
                        {"period_bands", bands},
                        {"sinusoids", {f.sinusoids.first, f.sinusoids.second}},
                        {"slope_band", band_to_json(f.slope_band)},
                        {"piecewise_trend_prob", f.piecewise_trend_prob},
                        {"seasonal_dummy_prob", f.seasonal_dummy_prob},
                        {"dummy_periods", f.dummy_periods},
                        {"noise_level", f.noise_level},
                        {"level_band", band_to_json(f.level_band)},
                        {"scale_band", band_to_json(f.scale_band)}});
  }
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : spec.groups) {
    groups.push_back({{"granularity", to_string(g.granularity)},
                      {"count", g.count},
                      {"length_min", g.length_min},
                      {"length_max", g.length_max},
                      {"family", g.family}});
  }
  j = nlohmann::json{{"families", families}, {"groups", groups}, {"start", spec.start}};
}

void from_json(const nlohmann::json& j, SyntheticCorpusSpec& spec) {
  reject_unknown(j, {"families", "groups", "start"}, "corpus spec");
  spec = SyntheticCorpusSpec{};
  read_optional(j, "start", spec.start);
  for (const auto& fj : j.at("families")) {
    reject_unknown(fj,
                   {"name", "role", "period_bands", "sinusoids", "slope_band", "piecewise_trend_prob",
                    "seasonal_dummy_prob", "dummy_periods", "noise_level", "level_band", "scale_band"},
                   "corpus family");
    PatternFamily f;
    f.name = fj.at("name").get<std::string>();
    const std::string role = fj.value("role", "pretrain");
    if (role != "pretrain" && role != "holdout") throw ConfigError("corpus family: role must be pretrain or holdout");
    f.role = role == "pretrain" ? FamilyRole::kPretrain : FamilyRole::kHoldout;
    for (const auto& b : fj.at("period_bands")) f.period_bands.push_back(band_from_json(b));
    if (fj.contains("sinusoids")) {
      const auto& s = fj.at("sinusoids");
      f.sinusoids = {s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()};
    }
    if (fj.contains("slope_band")) f.slope_band = band_from_json(fj.at("slope_band"));
    if (fj.contains("level_band")) f.level_band = band_from_json(fj.at("level_band"));
    if (fj.contains("scale_band")) f.scale_band = band_from_json(fj.at("scale_band"));
    read_optional(fj, "piecewise_trend_prob", f.piecewise_trend_prob);
    read_optional(fj, "seasonal_dummy_prob", f.seasonal_dummy_prob);
    read_optional(fj, "dummy_periods", f.dummy_periods);
    read_optional(fj, "noise_level", f.noise_level);
    spec.families.push_back(std::move(f));
  }
  for (const auto& gj : j.at("groups")) {
    reject_unknown(gj, {"granularity", "count", "length_min", "length_max", "length", "family"}, "corpus group");
    SyntheticGroup g;
    g.granularity = parse_granularity(gj.at("granularity").get<std::string>());
    g.count = gj.at("count").get<std::size_t>();
    if (gj.contains("length")) g.length_min = g.length_max = gj.at("length").get<std::size_t>();
    read_optional(gj, "length_min", g.length_min);
    read_optional(gj, "length_max", g.length_max);
    g.family = gj.at("family").get<std::string>();
    spec.groups.push_back(std::move(g));
  }
}

std::vector<TimeSeries> synth_corpus(const SyntheticCorpusSpec& spec, std::uint64_t seed) {
  spec.validate();
  const Timestamp start = parse_timestamp(spec.start);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](const Band& b) { return b.lo + (b.hi - b.lo) * unit(rng); };
  auto pick = [&](std::size_t n) { return std::min<std::size_t>(n - 1, static_cast<std::size_t>(unit(rng) * n)); };

  std::vector<TimeSeries> corpus;
  std::map<std::pair<std::string, Granularity>, std::size_t> counters;
  for (const SyntheticGroup& group : spec.groups) {
    const PatternFamily& fam = spec.family(group.family);
    for (std::size_t k = 0; k < group.count; ++k) {
      const std::size_t length = group.length_min + pick(group.length_max - group.length_min + 1);
      const double level = uniform(fam.level_band);
      const double amplitude = uniform(fam.scale_band);

      struct Wave { double period, amplitude, phase; };
      const std::size_t waves = fam.sinusoids.first + pick(fam.sinusoids.second - fam.sinusoids.first + 1);
      std::vector<Wave> sinusoids;
      for (std::size_t w = 0; w < waves; ++w) {
        const Band& band = fam.period_bands[pick(fam.period_bands.size())];
        sinusoids.push_back({uniform(band), w == 0 ? 1.0 : 0.2 + 0.4 * unit(rng), 2.0 * std::numbers::pi * unit(rng)});
      }
      auto signed_slope = [&] { return (unit(rng) < 0.5 ? -1.0 : 1.0) * uniform(fam.slope_band); };
      const double slope = signed_slope();
      const bool piecewise = unit(rng) < fam.piecewise_trend_prob;
      const double second_slope = piecewise ? signed_slope() : slope;
      const std::size_t change = piecewise ? static_cast<std::size_t>((0.3 + 0.4 * unit(rng)) * length) : length;

      std::vector<double> profile;
      if (unit(rng) < fam.seasonal_dummy_prob) {
        profile.resize(fam.dummy_periods[pick(fam.dummy_periods.size())]);
        double avg = 0.0;
        for (double& v : profile) avg += (v = 0.5 * gauss(rng));
        avg /= static_cast<double>(profile.size());
        for (double& v : profile) v -= avg;
      }

      std::vector<double> values(length);
      for (std::size_t t = 0; t < length; ++t) {
        const double x = static_cast<double>(t);
        double signal = 0.0;
        for (const Wave& w : sinusoids) signal += w.amplitude * std::sin(2.0 * std::numbers::pi * x / w.period + w.phase);
        const double trend = t < change ? slope * x
                                        : slope * static_cast<double>(change) +
                                              second_slope * (x - static_cast<double>(change));
        if (!profile.empty()) signal += profile[t % profile.size()];
        signal += fam.noise_level * gauss(rng);
        values[t] = level + amplitude * (signal + trend);
      }

      const std::size_t index = counters[{fam.name, group.granularity}]++;
      corpus.push_back(TimeSeries{fmt::format("{}-{}-{}", fam.name, to_string(group.granularity), index),
                                  group.granularity, start, std::move(values), false});
    }
  }
  return corpus;
}

std::vector<TimeSeries> filter_family(const std::vector<TimeSeries>& corpus, const std::string& family) {
  std::vector<TimeSeries> out;
  const std::string prefix = family + "-";
  for (const auto& s : corpus)
    if (s.id.rfind(prefix, 0) == 0) out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------

SplitSpec chronological_split(std::size_t length) {
  if (length < 10) throw ContractError("chronological_split: series length " + std::to_string(length) + " < 10");
  // Integer arithmetic gives the exact floor without rounding surprises.
  return SplitSpec{length, length * 7 / 10, length * 8 / 10};
}

// ---------------------------------------------------------------------------

std::size_t MixtureConfig::default_max_context(Granularity g) {
  switch (g) {
    case Granularity::kWeekly: return 256;
    case Granularity::kMonthly: return 64;
    default: return 512;
  }
}

std::size_t MixtureConfig::context_cap(Granularity g) const {
  auto it = max_context.find(g);
  return it == max_context.end() ? default_max_context(g) : it->second;
}

MixtureConfig MixtureConfig::uniform_over(const std::vector<TimeSeries>& corpus) {
  std::set<Granularity> present;
  for (const auto& s : corpus) present.insert(s.granularity);
  MixtureConfig m;
  for (Granularity g : present) m.weights[g] = 1.0 / static_cast<double>(present.size());
  return m;
}

void to_json(nlohmann::json& j, const MixtureConfig& m) {
  nlohmann::json weights = nlohmann::json::object();
  for (const auto& [g, w] : m.weights) weights[std::string(to_string(g))] = w;
  nlohmann::json caps = nlohmann::json::object();
  for (Granularity g : kAllGranularities) caps[std::string(to_string(g))] = m.context_cap(g);
  j = nlohmann::json{{"weights", weights}, {"max_context", caps}};
}

void from_json(const nlohmann::json& j, MixtureConfig& m) {
  reject_unknown(j, {"weights", "max_context"}, "mixture");
  m = MixtureConfig{};
  if (j.contains("weights"))
    for (const auto& [k, v] : j.at("weights").items()) m.weights[parse_granularity(k)] = v.get<double>();
  if (j.contains("max_context"))
    for (const auto& [k, v] : j.at("max_context").items()) m.max_context[parse_granularity(k)] = v.get<std::size_t>();
}

std::size_t TrainingWindow::active_tokens() const {
  return static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), std::uint8_t{1}));
}

TrainingWindow make_window(std::size_t series_index, std::size_t start, std::size_t length, std::size_t patch_len,
                           std::size_t horizon_len) {
  TrainingWindow w{series_index, start, length, length / patch_len, {}};
  w.loss_mask.resize(w.num_tokens);
  for (std::size_t j = 0; j < w.num_tokens; ++j) w.loss_mask[j] = patch_len * (j + 1) + horizon_len <= length ? 1 : 0;
  return w;
}

std::vector<TrainingWindow> sample_training_windows(const std::vector<TimeSeries>& corpus, const MixtureConfig& mixture,
                                                    std::size_t batch_size, std::size_t patch_len,
                                                    std::size_t horizon_len, std::mt19937_64& rng) {
  double total = 0.0;
  for (const auto& [g, w] : mixture.weights) {
    if (w < 0.0) throw ConfigError("mixture: negative weight for " + std::string(to_string(g)));
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ConfigError(fmt::format("mixture: weights sum to {} instead of 1", total));

  std::map<Granularity, std::vector<std::size_t>> eligible;
  for (const auto& [g, w] : mixture.weights) {
    if (w <= 0.0) continue;
    auto& list = eligible[g];
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& s = corpus[i];
      if (s.granularity == g && s.size() >= 10 && chronological_split(s.size()).train_end >= patch_len + horizon_len) {
        list.push_back(i);
      }
    }
    if (list.empty()) {
      throw ConfigError("mixture: granularity " + std::string(to_string(g)) +
                        " has positive weight but no series with a long enough train split");
    }
  }

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<TrainingWindow> batch;
  batch.reserve(batch_size);
  for (std::size_t b = 0; b < batch_size; ++b) {
    const double u = unit(rng) * total;
    double acc = 0.0;
    Granularity chosen = eligible.rbegin()->first;
    for (const auto& [g, w] : mixture.weights) {
      if (w <= 0.0) continue;
      acc += w;
      if (u < acc) {
        chosen = g;
        break;
      }
    }
    const auto& list = eligible.at(chosen);
    const std::size_t index = list[std::uniform_int_distribution<std::size_t>(0, list.size() - 1)(rng)];
    const std::size_t train_end = chronological_split(corpus[index].size()).train_end;
    const std::size_t length = std::min(mixture.context_cap(chosen) + horizon_len, train_end);
    const std::size_t start = std::uniform_int_distribution<std::size_t>(0, train_end - length)(rng);
    batch.push_back(make_window(index, start, length, patch_len, horizon_len));
  }
  return batch;
}

nlohmann::json corpus_manifest(const std::vector<TimeSeries>& corpus) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : corpus) {
    nlohmann::json entry{{"id", s.id},
                         {"granularity", to_string(s.granularity)},
                         {"length", s.size()},
                         {"start", format_timestamp(s.start)},
                         {"log_transform", s.log_transform}};
    if (s.size() >= 10) {
      const auto split = chronological_split(s.size());
      entry["split"] = {{"train_end", split.train_end}, {"val_end", split.val_end}};
    } else {
      entry["split"] = nullptr;
    }
    series.push_back(std::move(entry));
  }
  return {{"format", "tsdec-corpus-manifest"}, {"version", 1}, {"series", series}};
}

}  // namespace tsdec
