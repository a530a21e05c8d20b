#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prumidas/model_config.hpp"

namespace prumidas {

// Calendar date with serial-day arithmetic (proleptic Gregorian).
struct Date {
  int year = 1970, month = 1, day = 1;

  static Date from_serial(int days_since_epoch);
  int serial() const;  // days since 1970-01-01
  static Date parse(const std::string& iso);  // "YYYY-MM-DD"
  std::string iso() const;

  friend bool operator==(const Date& a, const Date& b) {
    return a.year == b.year && a.month == b.month && a.day == b.day;
  }
  friend bool operator<(const Date& a, const Date& b) { return a.serial() < b.serial(); }
};

struct DateFilter {
  std::optional<Date> from;
  std::optional<Date> to;  // inclusive
};

// One hourly row of the raw input, local time.
struct HourlyRow {
  Date date;
  int hour = 0;
  double price = 0.0;
  double demand_fc = 0.0, wind_fc = 0.0, solar_fc = 0.0;
};

// Hourly series for one country after clock-change repair: exactly H rows per
// calendar day, no gaps.
struct HourlyTable {
  std::string country;
  Date start;
  int n_days = 0;
  int hours_per_day = 24;
  // n_days * hours_per_day entries each, day-major.
  std::vector<double> price, demand_fc, wind_fc, solar_fc;

  int rows() const { return n_days * hours_per_day; }
};

// Daily fossil settlement prices, calendar-complete after interpolation.
struct DailyTable {
  Date start;
  int n_days = 0;
  std::vector<double> co2, coal, gas;
};

struct Standardization {
  std::string name;
  double mean = 0.0;
  double sd = 1.0;
};

struct CountryData {
  std::string name;
  std::vector<double> y;  // length T, EUR/MWh levels
  Eigen::MatrixXd x;      // T x N, standardized; daily columns constant within a day
  std::vector<Standardization> standardization;  // one per covariate
};

// Estimation-ready panel. Immutable after construction.
struct PanelDataset {
  ModelSpec spec;
  std::vector<CountryData> countries;
  Date start;
  int n_days = 0;         // T tilde, shared by all countries
  int presample_days = 0; // leading days usable only as lags

  int T() const { return n_days * spec.hours_per_day; }
  int estimation_days() const { return n_days - presample_days; }
  int n_obs() const {
    return spec.n_countries * estimation_days() * spec.hours_per_day;
  }
};

// Parses an hourly CSV (`timestamp,price,demand_fc,wind_fc,solar_fc`) and
// repairs clock changes: a 25-row day drops its duplicated hour, a 23-row day
// gets the gap filled by linear interpolation of the neighboring rows.
HourlyTable ingest_hourly(const std::string& path, const std::string& country,
                          int hours_per_day = 24);

// Parses a daily CSV (`date,co2,coal,gas`); missing dates and empty cells are
// filled by linear interpolation between the nearest observed values.
DailyTable ingest_daily(const std::string& path);

// Applies the estimation preprocessing: date filtering, one-day shift of the
// fossil columns, per-country standardization of every covariate over the
// estimation window, presample flagging. y stays in levels.
PanelDataset align_and_preprocess(const std::vector<HourlyTable>& hourly,
                                  const DailyTable& daily, const ModelSpec& spec,
                                  const DateFilter& filter = {});

// Canonical export: one CSV per country plus a JSON manifest, full precision.
// load_dataset(manifest) reproduces the dataset bit-exactly.
void export_dataset(const PanelDataset& data, const std::string& dir);
PanelDataset load_dataset(const std::string& manifest_path);

}  // namespace prumidas
