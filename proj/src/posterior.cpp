#include "prumidas/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "prumidas/design.hpp"
#include "prumidas/gibbs.hpp"

namespace prumidas {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / v.size();
}

double var_of(const std::vector<double>& v, double m) {
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / v.size();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile of empty sample");
  std::sort(v.begin(), v.end());
  const double idx = p * (v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(idx);
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double w = idx - lo;
  return (1.0 - w) * v[lo] + w * v[hi];
}

double effective_sample_size(const std::vector<double>& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 4) throw std::invalid_argument("chain too short for ESS");
  const double m = mean_of(chain);
  const double v0 = var_of(chain, m);
  if (!(v0 > 0.0)) throw std::runtime_error("degenerate chain");

  // Autocorrelation time truncated at the first negative pairwise sum.
  double tau = 1.0;
  for (int k = 1; k + 1 < n; k += 2) {
    double c0 = 0.0, c1 = 0.0;
    for (int i = 0; i + k < n; ++i) c0 += (chain[i] - m) * (chain[i + k] - m);
    for (int i = 0; i + k + 1 < n; ++i) c1 += (chain[i] - m) * (chain[i + k + 1] - m);
    const double pair = c0 / (n * v0) + c1 / (n * v0);
    if (pair <= 0.0) break;
    tau += 2.0 * pair;
  }
  return std::clamp(static_cast<double>(n) / tau, 1e-12, static_cast<double>(n));
}

double geweke_z(const std::vector<double>& chain) {
  const int n = static_cast<int>(chain.size());
  if (n < 100) throw std::invalid_argument("chain too short for Geweke diagnostic");
  const std::vector<double> a(chain.begin(), chain.begin() + n / 10);
  const std::vector<double> b(chain.end() - n / 2, chain.end());
  const double ma = mean_of(a), mb = mean_of(b);
  const double va = var_of(a, ma), vb = var_of(b, mb);
  if (!(va > 0.0) || !(vb > 0.0)) throw std::runtime_error("degenerate chain");
  const double se2 = va / effective_sample_size(a) + vb / effective_sample_size(b);
  return (ma - mb) / std::sqrt(se2);
}

CountryEffectSummary country_effect(const DrawStore& store, int covariate, int country,
                                    int lag, int grid_points) {
  const ModelSpec& spec = store.spec();
  if (covariate < 0 || covariate >= spec.n_covariates()) {
    throw std::out_of_range("covariate index out of range");
  }
  if (country < 0 || country >= spec.n_countries) {
    throw std::out_of_range("country index out of range");
  }
  const CoefLayout layout(spec);
  const int idx = layout.beta_index(covariate, lag);

  CountryEffectSummary out;
  out.covariate = covariate;
  out.country = country;
  out.lag = lag;
  out.covariate_name = spec.covariates[covariate].name;
  out.country_name = "country" + std::to_string(country);
  out.draws.resize(store.n_draws());
  for (int i = 0; i < store.n_draws(); ++i) {
    out.draws[i] = store.at(i, store.col_gamma(idx)) + store.at(i, store.col_zeta(country, idx));
  }
  out.q05 = quantile(out.draws, 0.05);
  out.q25 = quantile(out.draws, 0.25);
  out.q50 = quantile(out.draws, 0.50);
  out.q75 = quantile(out.draws, 0.75);
  out.q95 = quantile(out.draws, 0.95);

  const int n = static_cast<int>(out.draws.size());
  const double m = mean_of(out.draws);
  const double sd = std::sqrt(var_of(out.draws, m));
  const double iqr = out.q75 - out.q25;
  double bw = 0.9 * std::min(sd, iqr / 1.34) * std::pow(n, -0.2);
  if (!(bw > 0.0)) bw = std::max(sd, 1e-12);
  out.grid_x.resize(grid_points);
  out.grid_density.resize(grid_points);
  const double lo = m - 4.0 * sd, hi = m + 4.0 * sd;
  const double inv = 1.0 / (n * bw * std::sqrt(2.0 * M_PI));
  for (int i = 0; i < grid_points; ++i) {
    const double x = lo + (hi - lo) * i / (grid_points - 1);
    double dens = 0.0;
    for (double d : out.draws) {
      const double u = (x - d) / bw;
      dens += std::exp(-0.5 * u * u);
    }
    out.grid_x[i] = x;
    out.grid_density[i] = dens * inv;
  }
  return out;
}

VolatilityPath volatility_path_at(const PanelDataset& data, int country,
                                  const Eigen::VectorXd& sigma2_gh_row,
                                  const Eigen::VectorXd& qr_diag,
                                  VolatilityAggregate agg, int hour) {
  const int H = data.spec.hours_per_day;
  VolatilityPath out;
  out.country = country;
  out.country_name = data.countries.at(country).name;
  out.daily_aggregate = agg == VolatilityAggregate::Daily;
  out.hour = out.daily_aggregate ? -1 : hour;
  Eigen::VectorXd z(data.spec.coefficient_dim());
  for (int t = data.presample_days; t < data.n_days; ++t) {
    double value = 0.0;
    if (out.daily_aggregate) {
      for (int h = 0; h < H; ++h) {
        build_regressor(data, country, t, h, z);
        value += marginal_variance(z, sigma2_gh_row[h], qr_diag,
                                   Eigen::VectorXd::Zero(z.size()));
      }
      value /= H;
    } else {
      build_regressor(data, country, t, hour, z);
      value = marginal_variance(z, sigma2_gh_row[hour], qr_diag,
                                Eigen::VectorXd::Zero(z.size()));
    }
    out.values.push_back(value);
    out.dates.push_back(Date::from_serial(data.start.serial() + t).iso());
  }
  return out;
}

VolatilityPath volatility_path(const DrawStore& store, const PanelDataset& data,
                               int country, VolatilityAggregate agg, int hour,
                               PlugIn plug_in) {
  const ModelSpec& spec = store.spec();
  if (country < 0 || country >= spec.n_countries) {
    throw std::out_of_range("country index out of range");
  }
  const int H = spec.hours_per_day;
  const int n = store.n_draws();
  const CoefLayout layout(spec);

  const auto point = [&](const std::vector<double>& draws) {
    return plug_in == PlugIn::PosteriorMean ? mean_of(draws) : quantile(draws, 0.5);
  };

  // Identified composite sigma^2 / (lambda_h chi_g) per hour for this country.
  Eigen::VectorXd sigma2_gh_row(H);
  for (int h = 0; h < H; ++h) {
    std::vector<double> comp(n);
    for (int i = 0; i < n; ++i) {
      comp[i] = store.at(i, store.col_sigma2()) /
                (store.at(i, store.col_lambda(h)) * store.at(i, store.col_chi(country)));
    }
    sigma2_gh_row[h] = point(comp);
  }

  const auto scalar_hat = [&](int col) { return point(store.column(col)); };
  const double q_mu = scalar_hat(store.col_q(0)), q_alpha = scalar_hat(store.col_q(1)),
               q_beta = scalar_hat(store.col_q(2));
  const double r_mu = scalar_hat(store.col_r(0)), r_alpha = scalar_hat(store.col_r(1)),
               r_beta = scalar_hat(store.col_r(2));
  const auto qd = layout.block_diagonal(q_mu + r_mu, q_alpha + r_alpha, q_beta + r_beta);
  const Eigen::VectorXd qr_diag = Eigen::Map<const Eigen::VectorXd>(qd.data(), qd.size());

  VolatilityPath out = volatility_path_at(data, country, sigma2_gh_row, qr_diag, agg, hour);
  return out;
}

Diagnostics diagnostics(const DrawStore& store) {
  if (store.n_draws() < 100) throw std::invalid_argument("too few draws for diagnostics");
  const CoefLayout layout(store.spec());

  std::vector<std::pair<std::string, int>> cols;
  for (int k = 0; k < layout.dim(); ++k) cols.emplace_back(layout.names()[k], store.col_gamma(k));
  cols.emplace_back("sigma2", store.col_sigma2());
  for (int h = 0; h < store.spec().hours_per_day; ++h) {
    cols.emplace_back("lambda_" + std::to_string(h), store.col_lambda(h));
  }
  for (int g = 0; g < store.spec().n_countries; ++g) {
    cols.emplace_back("chi_" + std::to_string(g), store.col_chi(g));
  }
  for (int b = 0; b < 3; ++b) cols.emplace_back(store.column_names()[store.col_q(b)], store.col_q(b));
  for (int b = 0; b < 3; ++b) cols.emplace_back(store.column_names()[store.col_r(b)], store.col_r(b));

  Diagnostics diag;
  for (const auto& [name, col] : cols) {
    const std::vector<double> chain = store.column(col);
    const double m = mean_of(chain);
    ParameterDiagnostic d;
    d.name = name;
    d.mean = m;
    d.sd = std::sqrt(var_of(chain, m));
    d.ess = effective_sample_size(chain);
    d.geweke_z = geweke_z(chain);
    diag.params.push_back(d);
  }
  return diag;
}

void export_effects_csv(const std::vector<CountryEffectSummary>& effects,
                        const std::string& boxplot_path, const std::string& density_path,
                        const std::string& config_hash) {
  std::ofstream box(boxplot_path);
  if (!box) throw std::runtime_error("cannot write " + boxplot_path);
  box << "# config_hash=" << config_hash << "\n";
  box << "covariate,country,q05,q25,q50,q75,q95\n";
  for (const auto& e : effects) {
    box << e.covariate_name << "," << e.country_name << "," << fmt(e.q05) << ","
        << fmt(e.q25) << "," << fmt(e.q50) << "," << fmt(e.q75) << "," << fmt(e.q95) << "\n";
  }

  std::ofstream den(density_path);
  if (!den) throw std::runtime_error("cannot write " + density_path);
  den << "# config_hash=" << config_hash << "\n";
  den << "covariate,country,x,density\n";
  for (const auto& e : effects) {
    for (std::size_t i = 0; i < e.grid_x.size(); ++i) {
      den << e.covariate_name << "," << e.country_name << "," << fmt(e.grid_x[i]) << ","
          << fmt(e.grid_density[i]) << "\n";
    }
  }
}

void export_volatility_csv(const std::vector<VolatilityPath>& paths,
                           const std::string& path, const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# config_hash=" << config_hash
      << " units=variance (take sqrt for standard deviations)\n";
  out << "country,date,hour,value\n";
  for (const auto& p : paths) {
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      out << p.country_name << "," << p.dates[i] << ","
          << (p.daily_aggregate ? std::string("daily") : std::to_string(p.hour)) << ","
          << fmt(p.values[i]) << "\n";
    }
  }
}

void export_diagnostics_csv(const Diagnostics& diag, const std::string& path,
                            const std::string& config_hash) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "# config_hash=" << config_hash << "\n";
  out << "parameter,mean,sd,ess,geweke_z\n";
  for (const auto& d : diag.params) {
    out << d.name << "," << fmt(d.mean) << "," << fmt(d.sd) << "," << fmt(d.ess) << ","
        << fmt(d.geweke_z) << "\n";
  }
}

}  // namespace prumidas
