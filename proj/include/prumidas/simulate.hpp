#pragma once

#include <optional>
#include <string>
#include <vector>

#include "prumidas/gibbs.hpp"
#include "prumidas/panel_data.hpp"

namespace prumidas {

// A complete state designated as ground truth for forward simulation.
struct TrueParameters {
  ParameterState state;
};

struct ShockEpisode {
  int start_day = 0, end_day = 0;  // inclusive, 0-based simulation days
  double multiplier = 1.0;         // applied to the raw gas series
};

struct ScenarioConfig {
  int n_days = 120;                 // estimation-window days (presample on top)
  int spin_up_days = 14;            // simulated before the window so all lags exist
  double ar_high = 0.7;             // AR(1) coefficient of hourly covariates
  double ar_low = 0.95;             // AR(1) coefficient of daily covariates
  std::optional<ShockEpisode> shock;
  std::uint64_t seed = 1;
  Date start{2021, 1, 1};
};

struct SimulatedPanel {
  std::vector<HourlyTable> hourly;
  DailyTable daily;
  PanelDataset dataset;  // what align_and_preprocess produces from the tables
};

// Companion-matrix spectral radius of the common+country AR polynomial,
// maximized over countries. > 1 means an explosive truth (warn, not reject).
double ar_spectral_radius(const ModelSpec& spec, const ParameterState& truth);

// Simulates covariates, then y recursively through the stacked-form equation
// with errors N(0, sigma^2 / (lambda_h chi_g)). The emitted tables use the
// same CSV schemas the ingestion layer reads.
SimulatedPanel generate_panel(const ModelSpec& spec, const TrueParameters& truth,
                              const ScenarioConfig& scenario, Rng& rng);

// Writes the raw CSVs plus a data manifest and a truth manifest into dir.
void write_simulation(const SimulatedPanel& panel, const TrueParameters& truth,
                      const ScenarioConfig& scenario, const std::string& dir);

nlohmann::json truth_to_json(const TrueParameters& truth);
TrueParameters truth_from_json(const nlohmann::json& j, const ModelSpec& spec);
void to_json(nlohmann::json& j, const ScenarioConfig& s);
void from_json(const nlohmann::json& j, ScenarioConfig& s);

// Closed-form normal posterior of gamma with the random effects switched off
// (Q = R = 0) and fixed per-observation variances sigma^2_gh.
struct ConjugatePosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};
ConjugatePosterior conjugate_oracle(const FlatDesign& fd, const Eigen::MatrixXd& sigma2_gh,
                                    const PriorConfig& prior);

// Joint-distribution ("getting it right") test: marginal-conditional versus
// successive-conditional simulators on a tiny panel.
struct GewekeResult {
  std::string test_function;
  double mean_mc = 0, mean_sc = 0, z = 0;
};
struct GewekeConfig {
  int n_marginal = 20000;    // independent prior->data draws
  int n_successive = 40000;  // sweep + data-redraw iterations
  int successive_burn_in = 2000;
  std::uint64_t seed = 7;
  bool corrupt_sigma2 = false;
};
std::vector<GewekeResult> geweke_test(const ModelSpec& spec, const PriorConfig& prior,
                                      int n_days, const GewekeConfig& cfg);

}  // namespace prumidas
