#include "prumidas/model_config.hpp"

#include <algorithm>
#include <stdexcept>

namespace prumidas {

int ModelSpec::n_high() const {
  int n = 0;
  for (const auto& c : covariates) {
    if (c.freq == Frequency::High) ++n;
  }
  return n;
}

int ModelSpec::presample_days() const {
  int max_lag = max_ar_lag();
  for (int j = 0; j < n_covariates(); ++j) {
    max_lag = std::max(max_lag, covariates[j].max_lag * lag_multiplier(j));
  }
  return (max_lag + hours_per_day - 1) / hours_per_day;
}

int ModelSpec::lag_multiplier(int j) const {
  if (j < 0 || j >= n_covariates()) {
    throw std::out_of_range("covariate index out of range");
  }
  return covariates[j].freq == Frequency::High ? 1 : hours_per_day;
}

int ModelSpec::frequency_offset(int j, int h) const {
  if (j < 0 || j >= n_covariates()) {
    throw std::out_of_range("covariate index out of range");
  }
  if (h < 0 || h >= hours_per_day) {
    throw std::out_of_range("hour offset out of range");
  }
  return covariates[j].freq == Frequency::High ? h : 0;
}

int ModelSpec::coefficient_dim() const {
  int dim = 1 + static_cast<int>(ar_lags.size());
  for (const auto& c : covariates) dim += 1 + c.max_lag;
  return dim;
}

void ModelSpec::validate() const {
  if (n_countries <= 0) throw std::invalid_argument("n_countries must be positive");
  if (hours_per_day <= 0) throw std::invalid_argument("hours_per_day must be positive");
  int prev = 0;
  for (int a : ar_lags) {
    if (a <= prev) throw std::invalid_argument("ar_lags must be strictly ascending positive");
    prev = a;
  }
  bool seen_low = false;
  for (const auto& c : covariates) {
    if (c.max_lag < 0) throw std::invalid_argument("covariate max_lag must be nonnegative");
    if (c.name.empty()) throw std::invalid_argument("covariate name must be nonempty");
    int count = 0;
    for (const auto& other : covariates) {
      if (other.name == c.name) ++count;
    }
    if (count > 1) throw std::invalid_argument("duplicate covariate name: " + c.name);
    if (c.freq == Frequency::Low) {
      seen_low = true;
    } else if (seen_low) {
      throw std::invalid_argument("high-frequency covariates must precede low-frequency ones");
    }
  }
}

ModelSpec ModelSpec::daily_preset(int n_countries, int hours_per_day) {
  ModelSpec s;
  s.n_countries = n_countries;
  s.hours_per_day = hours_per_day;
  const int h = hours_per_day;
  s.ar_lags = {h, 2 * h, 7 * h};
  s.covariates = {
      {"demand", Frequency::High, 0}, {"wind", Frequency::High, 0},
      {"solar", Frequency::High, 0},  {"co2", Frequency::Low, 0},
      {"coal", Frequency::Low, 0},    {"gas", Frequency::Low, 0},
  };
  s.validate();
  return s;
}

CoefLayout::CoefLayout(const ModelSpec& spec) {
  spec.validate();
  n_alpha_ = static_cast<int>(spec.ar_lags.size());
  names_.push_back("mu");
  for (int a : spec.ar_lags) names_.push_back("alpha_lag" + std::to_string(a));
  int off = 1 + n_alpha_;
  for (const auto& c : spec.covariates) {
    beta_offset_.push_back(off);
    for (int b = 0; b <= c.max_lag; ++b) {
      names_.push_back(c.max_lag == 0 ? "beta_" + c.name
                                      : "beta_" + c.name + "_b" + std::to_string(b));
    }
    off += 1 + c.max_lag;
  }
  dim_ = off;
}

int CoefLayout::alpha_index(int a) const {
  if (a < 0 || a >= n_alpha_) throw std::out_of_range("AR lag index out of range");
  return 1 + a;
}

int CoefLayout::beta_index(int j, int b) const {
  if (j < 0 || j >= static_cast<int>(beta_offset_.size())) {
    throw std::out_of_range("covariate index out of range");
  }
  const int next = (j + 1 < static_cast<int>(beta_offset_.size()))
                       ? beta_offset_[j + 1] : dim_;
  if (b < 0 || beta_offset_[j] + b >= next) throw std::out_of_range("lag index out of range");
  return beta_offset_[j] + b;
}

std::vector<double> CoefLayout::block_diagonal(double v_mu, double v_alpha,
                                               double v_beta) const {
  std::vector<double> d(dim_, v_beta);
  d[0] = v_mu;
  for (int a = 0; a < n_alpha_; ++a) d[1 + a] = v_alpha;
  return d;
}

void PriorConfig::validate() const {
  for (double v : {s0, r0, n0, m0, v1, w1, v2, w2, v3, w3}) {
    if (!(v > 0.0)) throw std::invalid_argument("prior hyperparameters must be strictly positive");
  }
}

void SamplerConfig::validate() const {
  if (burn_in < 0) throw std::invalid_argument("burn_in must be nonnegative");
  if (retained < 1) throw std::invalid_argument("retained must be at least 1");
  if (thin < 1) throw std::invalid_argument("thin must be positive");
}

void to_json(nlohmann::json& j, const CovariateSpec& c) {
  j = {{"name", c.name},
       {"freq", c.freq == Frequency::High ? "high" : "low"},
       {"max_lag", c.max_lag}};
}

void from_json(const nlohmann::json& j, CovariateSpec& c) {
  c.name = j.at("name").get<std::string>();
  const auto f = j.at("freq").get<std::string>();
  if (f == "high") {
    c.freq = Frequency::High;
  } else if (f == "low") {
    c.freq = Frequency::Low;
  } else {
    throw std::invalid_argument("covariate freq must be 'high' or 'low'");
  }
  c.max_lag = j.value("max_lag", 0);
}

void to_json(nlohmann::json& j, const ModelSpec& s) {
  j = {{"schema_version", kConfigSchemaVersion},
       {"n_countries", s.n_countries},
       {"hours_per_day", s.hours_per_day},
       {"ar_lags", s.ar_lags},
       {"covariates", s.covariates}};
}

void from_json(const nlohmann::json& j, ModelSpec& s) {
  s.n_countries = j.at("n_countries").get<int>();
  s.hours_per_day = j.at("hours_per_day").get<int>();
  s.ar_lags = j.at("ar_lags").get<std::vector<int>>();
  s.covariates = j.at("covariates").get<std::vector<CovariateSpec>>();
  s.validate();
}

void to_json(nlohmann::json& j, const PriorConfig& p) {
  j = {{"schema_version", kConfigSchemaVersion},
       {"s0", p.s0}, {"r0", p.r0}, {"n0", p.n0}, {"m0", p.m0},
       {"v1", p.v1}, {"w1", p.w1}, {"v2", p.v2}, {"w2", p.w2},
       {"v3", p.v3}, {"w3", p.w3}};
}

void from_json(const nlohmann::json& j, PriorConfig& p) {
  PriorConfig d;
  p.s0 = j.value("s0", d.s0);
  p.r0 = j.value("r0", d.r0);
  p.n0 = j.value("n0", d.n0);
  p.m0 = j.value("m0", d.m0);
  p.v1 = j.value("v1", d.v1);
  p.w1 = j.value("w1", d.w1);
  p.v2 = j.value("v2", d.v2);
  p.w2 = j.value("w2", d.w2);
  p.v3 = j.value("v3", d.v3);
  p.w3 = j.value("w3", d.w3);
  p.validate();
}

void to_json(nlohmann::json& j, const SamplerConfig& s) {
  j = {{"schema_version", kConfigSchemaVersion},
       {"burn_in", s.burn_in},
       {"retained", s.retained},
       {"thin", s.thin},
       {"seed", s.seed},
       {"store_random_effects", s.store_random_effects},
       {"non_marginalized_gamma", s.non_marginalized_gamma},
       {"gamma_variance_multipliers", s.gamma_variance_multipliers}};
}

void from_json(const nlohmann::json& j, SamplerConfig& s) {
  SamplerConfig d;
  s.burn_in = j.value("burn_in", d.burn_in);
  s.retained = j.value("retained", d.retained);
  s.thin = j.value("thin", d.thin);
  s.seed = j.value("seed", d.seed);
  s.store_random_effects = j.value("store_random_effects", d.store_random_effects);
  s.non_marginalized_gamma = j.value("non_marginalized_gamma", d.non_marginalized_gamma);
  s.gamma_variance_multipliers =
      j.value("gamma_variance_multipliers", d.gamma_variance_multipliers);
  s.validate();
}

std::string config_hash(const nlohmann::json& j) {
  const std::string dump = j.dump();
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace prumidas
