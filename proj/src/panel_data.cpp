#include "prumidas/panel_data.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace prumidas {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& ctx) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
    fail("malformed numeric value '" + s + "' (" + ctx + ")");
  }
  return v;
}

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// Howard Hinnant's civil-from-days / days-from-civil algorithms.
int Date::serial() const {
  const int y = year - (month <= 2);
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

Date Date::from_serial(int z) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return Date{y + (m <= 2), static_cast<int>(m), static_cast<int>(d)};
}

Date Date::parse(const std::string& iso) {
  Date d;
  if (std::sscanf(iso.c_str(), "%d-%d-%d", &d.year, &d.month, &d.day) != 3 ||
      d.month < 1 || d.month > 12 || d.day < 1 || d.day > 31) {
    fail("malformed date '" + iso + "'");
  }
  return d;
}

std::string Date::iso() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", year, month, day);
  return buf;
}

namespace {

// "YYYY-MM-DD HH:MM[:SS]" or with a 'T' separator.
std::pair<Date, int> parse_timestamp(const std::string& ts, int line_no) {
  Date d;
  int hh = 0, mm = 0, ss = 0;
  const int n = std::sscanf(ts.c_str(), "%d-%d-%d%*1[T ]%d:%d:%d",
                            &d.year, &d.month, &d.day, &hh, &mm, &ss);
  if (n < 5 || hh < 0 || hh > 23) {
    fail("malformed timestamp '" + ts + "' at line " + std::to_string(line_no));
  }
  return {d, hh};
}

struct RawHourly {
  int hour;
  double v[4];  // price, demand, wind, solar
};

}  // namespace

HourlyTable ingest_hourly(const std::string& path, const std::string& country,
                          int hours_per_day) {
  std::ifstream in(path);
  if (!in) fail("cannot open hourly CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) fail("empty hourly CSV: " + path);
  if (split_csv(line) !=
      std::vector<std::string>{"timestamp", "price", "demand_fc", "wind_fc", "solar_fc"}) {
    fail("unexpected hourly CSV header in " + path);
  }

  // Group rows by calendar day, keeping file order within a day.
  std::vector<std::pair<Date, std::vector<RawHourly>>> days;
  int line_no = 1;
  long long prev_key = std::numeric_limits<long long>::min();
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) fail("malformed row at line " + std::to_string(line_no) + " in " + path);
    const auto [date, hour] = parse_timestamp(f[0], line_no);
    const std::string ctx = path + ":" + std::to_string(line_no);
    RawHourly r{hour,
                {parse_double(f[1], ctx), parse_double(f[2], ctx),
                 parse_double(f[3], ctx), parse_double(f[4], ctx)}};
    const long long key = static_cast<long long>(date.serial()) * 24 + hour;
    // A repeated hour is the autumn clock change; anything going backwards is bad data.
    if (key < prev_key) fail("timestamps not increasing at line " + std::to_string(line_no));
    prev_key = key;
    if (days.empty() || !(days.back().first == date)) {
      days.emplace_back(date, std::vector<RawHourly>{});
    }
    days.back().second.push_back(r);
  }
  if (days.empty()) fail("no data rows in " + path);
  for (size_t i = 1; i < days.size(); ++i) {
    if (days[i].first.serial() != days[i - 1].first.serial() + 1) {
      fail("missing calendar day after " + days[i - 1].first.iso() + " in " + path);
    }
  }

  const int H = hours_per_day;
  HourlyTable out;
  out.country = country;
  out.start = days.front().first;
  out.n_days = static_cast<int>(days.size());
  out.hours_per_day = H;
  std::vector<double>* cols[4] = {&out.price, &out.demand_fc, &out.wind_fc, &out.solar_fc};
  for (auto* c : cols) c->reserve(out.rows());

  for (auto& [date, rows] : days) {
    const int n = static_cast<int>(rows.size());
    if (n == H + 1) {
      // Autumn changeover: drop the second occurrence of the duplicated hour.
      for (int i = 1; i < n; ++i) {
        if (rows[i].hour == rows[i - 1].hour) {
          rows.erase(rows.begin() + i);
          break;
        }
      }
      if (static_cast<int>(rows.size()) != H) {
        fail("day " + date.iso() + " has " + std::to_string(n) + " rows but no duplicated hour");
      }
    } else if (n == H - 1) {
      // Spring changeover: insert the missing hour, filled below.
      int missing = -1, expect = 0;
      for (int i = 0; i < n; ++i, ++expect) {
        if (rows[i].hour != expect) {
          missing = expect;
          break;
        }
      }
      if (missing < 0) missing = H - 1;
      rows.insert(rows.begin() + missing,
                  RawHourly{missing, {std::nan(""), std::nan(""), std::nan(""), std::nan("")}});
    } else if (n != H) {
      fail("day " + date.iso() + " has " + std::to_string(n) + " rows in " + path);
    }
    for (int i = 0; i < H; ++i) {
      if (rows[i].hour != i) fail("day " + date.iso() + " has unexpected hour sequence");
      for (int c = 0; c < 4; ++c) cols[c]->push_back(rows[i].v[c]);
    }
  }

  // Fill spring-changeover gaps from the flat neighboring rows.
  for (auto* c : cols) {
    auto& v = *c;
    for (size_t i = 0; i < v.size(); ++i) {
      if (std::isnan(v[i])) {
        if (i == 0 || i + 1 >= v.size() || std::isnan(v[i + 1])) {
          fail("cannot interpolate clock-change gap at row " + std::to_string(i));
        }
        v[i] = 0.5 * (v[i - 1] + v[i + 1]);
      }
    }
  }
  return out;
}

DailyTable ingest_daily(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open daily CSV: " + path);
  std::string line;
  if (!std::getline(in, line)) fail("empty daily CSV: " + path);
  if (split_csv(line) != std::vector<std::string>{"date", "co2", "coal", "gas"}) {
    fail("unexpected daily CSV header in " + path);
  }

  std::map<int, std::array<double, 3>> rows;  // serial day -> values (nan = missing)
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) fail("malformed row at line " + std::to_string(line_no) + " in " + path);
    const Date d = Date::parse(f[0]);
    std::array<double, 3> v;
    for (int c = 0; c < 3; ++c) {
      v[c] = f[c + 1].empty()
                 ? std::nan("")
                 : parse_double(f[c + 1], path + ":" + std::to_string(line_no));
    }
    if (!rows.emplace(d.serial(), v).second) fail("duplicate date " + f[0] + " in " + path);
  }
  if (rows.empty()) fail("no data rows in " + path);

  DailyTable out;
  const int s0 = rows.begin()->first;
  const int s1 = rows.rbegin()->first;
  out.start = Date::from_serial(s0);
  out.n_days = s1 - s0 + 1;
  std::vector<double>* cols[3] = {&out.co2, &out.coal, &out.gas};
  for (int c = 0; c < 3; ++c) {
    auto& v = *cols[c];
    v.assign(out.n_days, std::nan(""));
    for (const auto& [serial, vals] : rows) v[serial - s0] = vals[c];
    // Linear interpolation between the nearest observed values.
    int prev = -1;
    for (int i = 0; i < out.n_days; ++i) {
      if (std::isnan(v[i])) continue;
      if (prev < 0 && i > 0) fail("daily series has a gap with no left anchor in " + path);
      if (prev >= 0 && i > prev + 1) {
        for (int k = prev + 1; k < i; ++k) {
          const double w = static_cast<double>(k - prev) / (i - prev);
          v[k] = (1.0 - w) * v[prev] + w * v[i];
        }
      }
      prev = i;
    }
    if (prev != out.n_days - 1) fail("daily series has a gap with no right anchor in " + path);
  }
  return out;
}

namespace {

enum class Source { Demand, Wind, Solar, Co2, Coal, Gas };

Source covariate_source(const CovariateSpec& c) {
  static const std::map<std::string, Source> table = {
      {"demand", Source::Demand}, {"wind", Source::Wind}, {"solar", Source::Solar},
      {"co2", Source::Co2},       {"coal", Source::Coal}, {"gas", Source::Gas}};
  const auto it = table.find(c.name);
  if (it == table.end()) fail("unknown covariate name '" + c.name + "'");
  const bool low = it->second == Source::Co2 || it->second == Source::Coal ||
                   it->second == Source::Gas;
  if (low != (c.freq == Frequency::Low)) {
    fail("covariate '" + c.name + "' has the wrong frequency tag");
  }
  return it->second;
}

}  // namespace

PanelDataset align_and_preprocess(const std::vector<HourlyTable>& hourly,
                                  const DailyTable& daily, const ModelSpec& spec,
                                  const DateFilter& filter) {
  spec.validate();
  if (static_cast<int>(hourly.size()) != spec.n_countries) {
    fail("expected " + std::to_string(spec.n_countries) + " hourly tables, got " +
         std::to_string(hourly.size()));
  }
  const int H = spec.hours_per_day;
  for (const auto& t : hourly) {
    if (t.hours_per_day != H) fail("hourly table '" + t.country + "' has wrong hours per day");
  }

  // Common window: intersection of the country ranges, clipped by the filter.
  int d0 = hourly.front().start.serial();
  int d1 = d0 + hourly.front().n_days - 1;
  for (const auto& t : hourly) {
    d0 = std::max(d0, t.start.serial());
    d1 = std::min(d1, t.start.serial() + t.n_days - 1);
  }
  if (filter.from) d0 = std::max(d0, filter.from->serial());
  if (filter.to) d1 = std::min(d1, filter.to->serial());
  if (d1 < d0) fail("empty date range after filtering");
  for (const auto& t : hourly) {
    if (t.start.serial() > d0 || t.start.serial() + t.n_days - 1 < d1) {
      fail("country '" + t.country + "' does not cover the filtered range");
    }
  }

  PanelDataset out;
  out.spec = spec;
  out.start = Date::from_serial(d0);
  out.n_days = d1 - d0 + 1;
  out.presample_days = spec.presample_days();
  if (out.estimation_days() <= 0) {
    fail("insufficient presample history: need more than " +
         std::to_string(out.presample_days) + " days");
  }

  const bool needs_daily = [&] {
    for (const auto& c : spec.covariates) {
      if (c.freq == Frequency::Low) return true;
    }
    return false;
  }();
  if (needs_daily) {
    // Day-t rows carry the day-(t-1) settlement value, so one leading day is needed.
    const int need0 = d0 - 1, need1 = d1 - 1;
    if (daily.start.serial() > need0 ||
        daily.start.serial() + daily.n_days - 1 < need1) {
      fail("daily table does not cover the range plus one leading day");
    }
  }

  const int T = out.n_days * H;
  const int N = spec.n_covariates();
  const int est_rows = out.estimation_days() * H;

  for (const auto& t : hourly) {
    CountryData cd;
    cd.name = t.country;
    const int off = (d0 - t.start.serial()) * H;
    cd.y.assign(t.price.begin() + off, t.price.begin() + off + T);
    cd.x.resize(T, N);
    for (int j = 0; j < N; ++j) {
      const Source src = covariate_source(spec.covariates[j]);
      for (int day = 0; day < out.n_days; ++day) {
        for (int h = 0; h < H; ++h) {
          const int row = day * H + h;
          double v = 0.0;
          switch (src) {
            case Source::Demand: v = t.demand_fc[off + row]; break;
            case Source::Wind: v = t.wind_fc[off + row]; break;
            case Source::Solar: v = t.solar_fc[off + row]; break;
            default: {
              const int src_day = (d0 + day - 1) - daily.start.serial();
              v = (src == Source::Co2) ? daily.co2[src_day]
                  : (src == Source::Coal) ? daily.coal[src_day]
                                          : daily.gas[src_day];
            }
          }
          cd.x(row, j) = v;
        }
      }
      // Standardize over the estimation window only; presample rows get the
      // same affine map so lagged values stay on one scale.
      const auto col = cd.x.col(j).tail(est_rows);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().sum() / (est_rows - 1));
      if (!(sd > 0.0)) {
        fail("covariate '" + spec.covariates[j].name + "' in country '" + cd.name +
             "': zero variance, cannot standardize");
      }
      cd.x.col(j) = (cd.x.col(j).array() - mean) / sd;
      cd.standardization.push_back({spec.covariates[j].name, mean, sd});
    }
    out.countries.push_back(std::move(cd));
  }
  return out;
}

void export_dataset(const PanelDataset& data, const std::string& dir) {
  nlohmann::json manifest;
  manifest["schema_version"] = kConfigSchemaVersion;
  manifest["spec"] = data.spec;
  manifest["spec_hash"] = config_hash(nlohmann::json(data.spec));
  manifest["start"] = data.start.iso();
  manifest["n_days"] = data.n_days;
  manifest["presample_days"] = data.presample_days;
  manifest["preprocessing_notes"] = {
      "fossil columns shifted by one calendar day after interpolation",
      "solar standardized like every other covariate (affine map over all hours)"};

  const int H = data.spec.hours_per_day;
  const int N = data.spec.n_covariates();
  for (const auto& cd : data.countries) {
    const std::string csv = cd.name + ".csv";
    std::ofstream out(dir + "/" + csv);
    if (!out) fail("cannot write " + dir + "/" + csv);
    out << "date,hour,y";
    for (const auto& c : data.spec.covariates) out << "," << c.name;
    out << "\n";
    for (int day = 0; day < data.n_days; ++day) {
      const std::string date = Date::from_serial(data.start.serial() + day).iso();
      for (int h = 0; h < H; ++h) {
        const int row = day * H + h;
        out << date << "," << h << "," << fmt_double(cd.y[row]);
        for (int j = 0; j < N; ++j) out << "," << fmt_double(cd.x(row, j));
        out << "\n";
      }
    }
    nlohmann::json cj;
    cj["name"] = cd.name;
    cj["csv"] = csv;
    for (const auto& s : cd.standardization) {
      cj["standardization"].push_back({{"name", s.name}, {"mean", s.mean}, {"sd", s.sd}});
    }
    manifest["countries"].push_back(cj);
  }
  std::ofstream mf(dir + "/manifest.json");
  if (!mf) fail("cannot write " + dir + "/manifest.json");
  mf << manifest.dump(2) << "\n";
}

PanelDataset load_dataset(const std::string& manifest_path) {
  std::ifstream mf(manifest_path);
  if (!mf) fail("cannot open " + manifest_path);
  nlohmann::json manifest;
  mf >> manifest;

  PanelDataset out;
  out.spec = manifest.at("spec").get<ModelSpec>();
  out.start = Date::parse(manifest.at("start").get<std::string>());
  out.n_days = manifest.at("n_days").get<int>();
  out.presample_days = manifest.at("presample_days").get<int>();

  const std::string dir = [&] {
    const auto pos = manifest_path.find_last_of('/');
    return pos == std::string::npos ? std::string(".") : manifest_path.substr(0, pos);
  }();

  const int H = out.spec.hours_per_day;
  const int N = out.spec.n_covariates();
  const int T = out.n_days * H;
  for (const auto& cj : manifest.at("countries")) {
    CountryData cd;
    cd.name = cj.at("name").get<std::string>();
    for (const auto& sj : cj.at("standardization")) {
      cd.standardization.push_back({sj.at("name").get<std::string>(),
                                    sj.at("mean").get<double>(),
                                    sj.at("sd").get<double>()});
    }
    const std::string path = dir + "/" + cj.at("csv").get<std::string>();
    std::ifstream in(path);
    if (!in) fail("cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    cd.y.resize(T);
    cd.x.resize(T, N);
    int row = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (row >= T) fail("too many rows in " + path);
      const auto f = split_csv(line);
      if (static_cast<int>(f.size()) != 3 + N) {
        fail("malformed row " + std::to_string(row) + " in " + path);
      }
      cd.y[row] = parse_double(f[2], path);
      for (int j = 0; j < N; ++j) cd.x(row, j) = parse_double(f[3 + j], path);
      ++row;
    }
    if (row != T) fail("row count mismatch in " + path);
    out.countries.push_back(std::move(cd));
  }
  if (static_cast<int>(out.countries.size()) != out.spec.n_countries) {
    fail("country count mismatch in " + manifest_path);
  }
  return out;
}

}  // namespace prumidas
