#pragma once

#include <string>
#include <vector>

#include "prumidas/draw_store.hpp"
#include "prumidas/panel_data.hpp"

namespace prumidas {

// Draws and summaries of the identified country effect beta_j + zeta_{beta,gj}.
struct CountryEffectSummary {
  int covariate = 0, country = 0, lag = 0;
  std::string covariate_name, country_name;
  std::vector<double> draws;
  double q05 = 0, q25 = 0, q50 = 0, q75 = 0, q95 = 0;
  std::vector<double> grid_x, grid_density;  // Gaussian KDE, Silverman bandwidth
};

struct VolatilityPath {
  int country = 0;
  std::string country_name;
  bool daily_aggregate = true;
  int hour = -1;                 // set when daily_aggregate is false
  std::vector<double> values;    // one per estimation day (or day-hour)
  std::vector<std::string> dates;
};

struct ParameterDiagnostic {
  std::string name;
  double mean = 0, sd = 0, ess = 0, geweke_z = 0;
};
struct Diagnostics {
  std::vector<ParameterDiagnostic> params;
};

// Quantile with linear interpolation between order statistics.
double quantile(std::vector<double> v, double p);

// Effective sample size from the autocorrelation time, truncated at the first
// negative pairwise sum. Throws on a degenerate (constant) chain.
double effective_sample_size(const std::vector<double>& chain);
// Split-mean z-score, first 10% vs last 50%, ESS-adjusted variances.
double geweke_z(const std::vector<double>& chain);

CountryEffectSummary country_effect(const DrawStore& store, int covariate, int country,
                                    int lag = 0, int grid_points = 512);

enum class VolatilityAggregate { Daily, Hourly };
enum class PlugIn { PosteriorMean, PosteriorMedian };

// Plug-in time-varying volatility path sigma2_gh + z'(R+Q)z with posterior
// point estimates; the daily aggregate averages over the H hours of each day.
VolatilityPath volatility_path(const DrawStore& store, const PanelDataset& data, int country,
                               VolatilityAggregate agg = VolatilityAggregate::Daily,
                               int hour = 0, PlugIn plug_in = PlugIn::PosteriorMean);

// Same formula evaluated at an explicit state (used for oracle cross-checks).
VolatilityPath volatility_path_at(const PanelDataset& data, int country,
                                  const Eigen::VectorXd& sigma2_gh_row,
                                  const Eigen::VectorXd& qr_diag,
                                  VolatilityAggregate agg, int hour = 0);

// Diagnostics for the gamma components plus the scalar variance parameters.
Diagnostics diagnostics(const DrawStore& store);

// CSV/JSON exports with documented schemas; every file carries the config hash.
void export_effects_csv(const std::vector<CountryEffectSummary>& effects,
                        const std::string& boxplot_path, const std::string& density_path,
                        const std::string& config_hash);
void export_volatility_csv(const std::vector<VolatilityPath>& paths,
                           const std::string& path, const std::string& config_hash);
void export_diagnostics_csv(const Diagnostics& diag, const std::string& path,
                            const std::string& config_hash);

}  // namespace prumidas
