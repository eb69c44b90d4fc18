#pragma once

// Station water-level ingestion: parse per-hurricane station files, derive
// hourly offset series (modeled - observed), and drop stations with gaps or
// outlier offsets.

#include "surge/csv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace surge {

enum class Agency { NOAA, USGS, USACE, TCOON, PRSN, OTHER };

inline Agency parse_agency(std::string_view s) {
  if (s == "NOAA") return Agency::NOAA;
  if (s == "USGS") return Agency::USGS;
  if (s == "USACE") return Agency::USACE;
  if (s == "TCOON") return Agency::TCOON;
  if (s == "PRSN") return Agency::PRSN;
  return Agency::OTHER;
}

inline const char* agency_name(Agency a) {
  switch (a) {
    case Agency::NOAA: return "NOAA";
    case Agency::USGS: return "USGS";
    case Agency::USACE: return "USACE";
    case Agency::TCOON: return "TCOON";
    case Agency::PRSN: return "PRSN";
    case Agency::OTHER: break;
  }
  return "OTHER";
}

using Timestamp = std::chrono::sys_seconds;

/// Parses `YYYY-MM-DDTHH:MM[:SS][Z]` (UTC).
inline std::optional<Timestamp> parse_iso8601(const std::string& s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char tail[8] = {0};
  const int n = std::sscanf(s.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%7s", &y, &mo, &d, &h, &mi, &sec, tail);
  if (n < 5) return std::nullopt;
  if (n == 7 && std::string(tail) != "Z") return std::nullopt;
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_iso8601(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

/// One gauge station's hourly modeled and observed water levels (feet).
/// Missing values are NaN until the station is screened.
struct StationSeries {
  std::string station_id;
  Agency agency = Agency::OTHER;
  double lon = 0.0;
  double lat = 0.0;
  std::vector<Timestamp> timestamps;
  std::vector<double> modeled;
  std::vector<double> observed;

  std::size_t length() const { return timestamps.size(); }
};

struct OffsetSeries {
  std::string station_id;
  double lon = 0.0;
  double lat = 0.0;
  std::vector<double> values;
};

/// Why a station cannot be used, or nullopt when it is complete.
inline std::optional<std::string> screen_station(const StationSeries& s) {
  if (s.timestamps.empty()) return "no data";
  if (s.modeled.size() != s.length() || s.observed.size() != s.length()) return "series length mismatch";
  if (!(s.lon >= -180.0 && s.lon <= 180.0 && s.lat >= -90.0 && s.lat <= 90.0)) return "coordinates out of range";
  for (std::size_t t = 0; t < s.length(); ++t) {
    if (t > 0) {
      const auto step = s.timestamps[t] - s.timestamps[t - 1];
      if (step <= std::chrono::seconds{0}) return "timestamps not strictly increasing";
      if (step != std::chrono::hours{1}) return "missing hourly values (gap after " + format_iso8601(s.timestamps[t - 1]) + ")";
    }
    if (!std::isfinite(s.modeled[t])) return "missing modeled value at " + format_iso8601(s.timestamps[t]);
    if (!std::isfinite(s.observed[t])) return "missing observed value at " + format_iso8601(s.timestamps[t]);
  }
  return std::nullopt;
}

/// offset[t] = modeled[t] - observed[t]. Incomplete stations are rejected.
inline OffsetSeries compute_offsets(const StationSeries& s) {
  if (auto why = screen_station(s)) throw DataError("station " + s.station_id + " excluded: " + *why);
  OffsetSeries o{s.station_id, s.lon, s.lat, std::vector<double>(s.length())};
  for (std::size_t t = 0; t < s.length(); ++t) o.values[t] = s.modeled[t] - s.observed[t];
  return o;
}

inline const std::vector<std::string>& station_csv_header() {
  static const std::vector<std::string> h{"station_id", "agency",   "lon_deg",    "lat_deg",
                                          "timestamp_iso8601", "modeled_ft", "observed_ft"};
  return h;
}

inline const std::vector<std::string>& offsets_csv_header() {
  static const std::vector<std::string> h{"station_id", "lon_deg", "lat_deg", "t_index", "offset_ft"};
  return h;
}

/// Groups station-hour rows by station, ordered by first appearance, rows
/// within a station sorted by time. Empty value fields become NaN.
inline std::vector<StationSeries> read_station_csv(std::istream& in, const std::string& source = "<stations>") {
  const auto table = csv::Table::read(in, station_csv_header(), source);
  std::vector<StationSeries> stations;
  std::map<std::string, std::size_t> index;
  struct Sample {
    Timestamp t;
    double modeled, observed;
  };
  std::vector<std::vector<Sample>> samples;
  const double nan = std::numeric_limits<double>::quiet_NaN();

  for (const auto& row : table.rows()) {
    const std::string& id = row.fields[0];
    if (id.empty()) throw FormatError(table.where(row) + ": empty station_id");
    const double lon = table.required_number(row, 2);
    const double lat = table.required_number(row, 3);
    const auto ts = parse_iso8601(row.fields[4]);
    if (!ts) throw FormatError(table.where(row) + ": bad timestamp '" + row.fields[4] + "'");
    auto [it, inserted] = index.try_emplace(id, stations.size());
    if (inserted) {
      stations.push_back(StationSeries{id, parse_agency(row.fields[1]), lon, lat, {}, {}, {}});
      samples.emplace_back();
    } else {
      const auto& s = stations[it->second];
      if (s.lon != lon || s.lat != lat) throw FormatError(table.where(row) + ": station " + id + " changes coordinates");
    }
    samples[it->second].push_back({*ts, table.number(row, 5).value_or(nan), table.number(row, 6).value_or(nan)});
  }
  for (std::size_t i = 0; i < stations.size(); ++i) {
    auto& v = samples[i];
    std::stable_sort(v.begin(), v.end(), [](const Sample& a, const Sample& b) { return a.t < b.t; });
    for (const auto& smp : v) {
      stations[i].timestamps.push_back(smp.t);
      stations[i].modeled.push_back(smp.modeled);
      stations[i].observed.push_back(smp.observed);
    }
  }
  return stations;
}

inline std::vector<StationSeries> read_station_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open station file " + path);
  return read_station_csv(in, path);
}

inline void write_station_csv(std::ostream& out, const std::vector<StationSeries>& stations) {
  csv::write_header(out, station_csv_header());
  auto field = [](double v) { return std::isfinite(v) ? csv::fmt(v) : std::string(); };
  for (const auto& s : stations) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      out << s.station_id << ',' << agency_name(s.agency) << ',' << csv::fmt(s.lon) << ',' << csv::fmt(s.lat) << ','
          << format_iso8601(s.timestamps[t]) << ',' << field(s.modeled[t]) << ',' << field(s.observed[t]) << '\n';
    }
  }
}

inline void write_offsets_csv(std::ostream& out, const std::vector<OffsetSeries>& offsets) {
  csv::write_header(out, offsets_csv_header());
  for (const auto& o : offsets) {
    for (std::size_t t = 0; t < o.values.size(); ++t) {
      out << o.station_id << ',' << csv::fmt(o.lon) << ',' << csv::fmt(o.lat) << ',' << t << ','
          << csv::fmt(o.values[t]) << '\n';
    }
  }
}

inline std::vector<OffsetSeries> read_offsets_csv(std::istream& in, const std::string& source = "<offsets>") {
  const auto table = csv::Table::read(in, offsets_csv_header(), source);
  std::vector<OffsetSeries> out;
  std::map<std::string, std::size_t> index;
  for (const auto& row : table.rows()) {
    const std::string& id = row.fields[0];
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back(OffsetSeries{id, table.required_number(row, 1), table.required_number(row, 2), {}});
    auto& o = out[it->second];
    const long long t = table.integer(row, 3);
    if (t != static_cast<long long>(o.values.size())) {
      throw FormatError(table.where(row) + ": t_index " + std::to_string(t) + " out of sequence for station " + id);
    }
    o.values.push_back(table.required_number(row, 4));
  }
  return out;
}

inline std::vector<OffsetSeries> read_offsets_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open offsets file " + path);
  return read_offsets_csv(in, path);
}

// ---------------------------------------------------------------------------
// Outlier screening

struct OutlierPolicy {
  double iqr_multiplier = 3.0;
  double margin_floor_ft = 0.1;  // minimum distance of the threshold above Q3
};

struct RemovedStation {
  std::string station_id;
  double max_abs_offset = 0.0;
  double threshold = 0.0;
  std::size_t pass = 0;

  std::string reason() const {
    return "max |offset| " + csv::fmt(max_abs_offset) + " ft exceeds outlier threshold " + csv::fmt(threshold) + " ft";
  }
};

struct FilterResult {
  std::vector<OffsetSeries> kept;
  std::vector<RemovedStation> removed;
  double final_threshold = 0.0;
};

/// Linear-interpolation quantile (sample quantile type 7) of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw DataError("quantile of empty data");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Threshold on |offset| for one pool of stations: Q3 + max(k * IQR, floor).
inline double outlier_threshold(const std::vector<OffsetSeries>& stations, const OutlierPolicy& policy) {
  std::vector<double> pooled;
  for (const auto& s : stations) {
    for (double v : s.values) pooled.push_back(std::abs(v));
  }
  std::sort(pooled.begin(), pooled.end());
  const double q1 = quantile_sorted(pooled, 0.25);
  const double q3 = quantile_sorted(pooled, 0.75);
  return q3 + std::max(policy.iqr_multiplier * (q3 - q1), policy.margin_floor_ft);
}

/// Removes every station whose |offset| strictly exceeds the pooled threshold,
/// re-deriving the threshold on the survivors until no station is removed.
/// The result is therefore a fixed point: filtering it again removes nothing.
inline FilterResult filter_outlier_stations(std::vector<OffsetSeries> stations, const OutlierPolicy& policy = {}) {
  if (stations.empty()) throw DataError("outlier filter: no stations");
  FilterResult res;
  for (std::size_t pass = 1;; ++pass) {
    const double thr = outlier_threshold(stations, policy);
    std::vector<OffsetSeries> keep;
    std::size_t removed_now = 0;
    for (auto& s : stations) {
      double worst = 0.0;
      for (double v : s.values) worst = std::max(worst, std::abs(v));
      if (worst > thr) {
        res.removed.push_back({s.station_id, worst, thr, pass});
        ++removed_now;
      } else {
        keep.push_back(std::move(s));
      }
    }
    stations = std::move(keep);
    res.final_threshold = thr;
    if (removed_now == 0 || stations.empty()) break;
  }
  res.kept = std::move(stations);
  return res;
}

// ---------------------------------------------------------------------------
// Dataset bookkeeping

struct DatasetSummary {
  std::size_t station_count = 0;
  std::vector<std::size_t> lengths;
  std::size_t total_offsets = 0;
  std::optional<std::size_t> uniform_length;  // set when every station has the same T
  std::vector<std::string> warnings;
};

inline DatasetSummary validate_lengths(const std::vector<std::size_t>& lengths) {
  DatasetSummary s;
  s.station_count = lengths.size();
  s.lengths = lengths;
  for (auto n : lengths) s.total_offsets += n;
  if (!lengths.empty()) {
    const auto [mn, mx] = std::minmax_element(lengths.begin(), lengths.end());
    if (*mn == *mx) {
      s.uniform_length = *mn;
    } else {
      s.warnings.push_back("mixed signal lengths: " + std::to_string(*mn) + ".." + std::to_string(*mx) + " hours");
    }
  }
  return s;
}

/// Per-station length implied by a (stations, total offsets) pair, when the
/// split is even.
inline std::optional<std::size_t> infer_uniform_length(std::size_t stations, std::size_t total_offsets) {
  if (stations == 0 || total_offsets % stations != 0) return std::nullopt;
  return total_offsets / stations;
}

inline DatasetSummary validate_dataset(const std::vector<OffsetSeries>& stations) {
  std::vector<std::size_t> lengths;
  lengths.reserve(stations.size());
  for (const auto& s : stations) lengths.push_back(s.values.size());
  return validate_lengths(lengths);
}

}  // namespace surge
