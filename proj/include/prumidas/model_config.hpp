#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace prumidas {

enum class Frequency { High, Low };

struct CovariateSpec {
  std::string name;
  Frequency freq = Frequency::High;
  int max_lag = 0;  // B_j, number of extra lags beyond the contemporaneous one
};

// Panel dimensions and lag structure. Immutable after validate(); shared
// read-only by the data, design, and sampler layers.
struct ModelSpec {
  int n_countries = 0;    // G
  int hours_per_day = 24; // H, frequency mismatch between hourly and daily series
  std::vector<int> ar_lags;            // high-frequency units, strictly ascending
  std::vector<CovariateSpec> covariates; // high-frequency entries first

  int n_covariates() const { return static_cast<int>(covariates.size()); }
  int n_high() const;
  int max_ar_lag() const { return ar_lags.empty() ? 0 : ar_lags.back(); }
  // Days of history an observation needs before it can enter estimation.
  int presample_days() const;

  // Step size applied to lags of covariate j: 1 for hourly series, H for daily.
  int lag_multiplier(int j) const;
  // Hour offset at which covariate j enters the hour-h equation: h for hourly
  // series, 0 for daily.
  int frequency_offset(int j, int h) const;

  // L = 1 + |ar_lags| + sum_j (1 + B_j)
  int coefficient_dim() const;

  // Throws std::invalid_argument on an inconsistent spec.
  void validate() const;

  // The empirical daily-lag preset: ar_lags {H, 2H, 7H}, three hourly
  // covariates (demand, wind, solar) and three daily ones (co2, coal, gas).
  static ModelSpec daily_preset(int n_countries, int hours_per_day = 24);
};

// Coefficient layout shared by gamma, psi rows, zeta rows, and the Q/R
// diagonals: [intercept | AR lags ascending | covariates in config order,
// lags ascending within each covariate].
struct CoefLayout {
  explicit CoefLayout(const ModelSpec& spec);

  int dim() const { return dim_; }
  int n_alpha() const { return n_alpha_; }
  int intercept_index() const { return 0; }
  int alpha_index(int a) const;            // a-th AR lag, 0-based
  int beta_index(int j, int b = 0) const;  // covariate j, lag b
  const std::vector<std::string>& names() const { return names_; }

  // Diagonal of Q (or R) from the three block scales (q_mu, q_alpha, q_beta).
  std::vector<double> block_diagonal(double v_mu, double v_alpha, double v_beta) const;

 private:
  int dim_ = 0;
  int n_alpha_ = 0;
  std::vector<int> beta_offset_;
  std::vector<std::string> names_;
};

struct PriorConfig {
  double s0 = 10.0;  // intercept prior std. dev.
  double r0 = 10.0;  // slope prior std. dev.
  double n0 = 0.1, m0 = 0.1;  // shape/rate for q and r scales
  double v1 = 0.1, w1 = 0.1;  // sigma^2
  double v2 = 0.1, w2 = 0.1;  // lambda_h
  double v3 = 0.1, w3 = 0.1;  // chi_g

  void validate() const;
};

struct SamplerConfig {
  int burn_in = 3000;
  int retained = 10000;
  int thin = 1;
  std::uint64_t seed = 0;
  bool store_random_effects = true;
  // Cross-check variants, both off in normal runs.
  bool non_marginalized_gamma = false;  // draw gamma conditional on (psi, zeta)
  bool gamma_variance_multipliers = false;  // Gamma instead of IG law for lambda/chi

  void validate() const;
};

void to_json(nlohmann::json& j, const CovariateSpec& c);
void from_json(const nlohmann::json& j, CovariateSpec& c);
void to_json(nlohmann::json& j, const ModelSpec& s);
void from_json(const nlohmann::json& j, ModelSpec& s);
void to_json(nlohmann::json& j, const PriorConfig& p);
void from_json(const nlohmann::json& j, PriorConfig& p);
void to_json(nlohmann::json& j, const SamplerConfig& s);
void from_json(const nlohmann::json& j, SamplerConfig& s);

inline constexpr int kConfigSchemaVersion = 1;

// FNV-1a over the canonical JSON dump; stamped into manifests and draw stores.
std::string config_hash(const nlohmann::json& j);

}  // namespace prumidas
