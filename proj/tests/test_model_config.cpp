#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "prumidas/model_config.hpp"

using namespace prumidas;

namespace {

ModelSpec preset9() { return ModelSpec::daily_preset(9); }

}  // namespace

TEST_CASE("lag multiplier by covariate frequency") {
  const ModelSpec spec = preset9();
  CHECK(spec.lag_multiplier(1) == 1);   // second hourly covariate
  CHECK(spec.lag_multiplier(4) == 24);  // second daily covariate
  CHECK_THROWS_AS(spec.lag_multiplier(6), std::out_of_range);
  CHECK_THROWS_AS(spec.lag_multiplier(-1), std::out_of_range);

  ModelSpec flat;  // H=1 collapses to a same-frequency model
  flat.n_countries = 1;
  flat.hours_per_day = 1;
  flat.covariates = {{"x", Frequency::High, 0}};
  flat.validate();
  CHECK(flat.lag_multiplier(0) == 1);
}

TEST_CASE("frequency offset by covariate frequency") {
  const ModelSpec spec = preset9();
  CHECK(spec.frequency_offset(0, 13) == 13);
  CHECK(spec.frequency_offset(5, 13) == 0);
  CHECK(spec.frequency_offset(0, 0) == 0);
  CHECK(spec.frequency_offset(5, 0) == 0);
  for (int j = 0; j < spec.n_covariates(); ++j) {
    for (int h = 0; h < spec.hours_per_day; ++h) {
      const int expected = spec.covariates[j].freq == Frequency::High ? h : 0;
      CHECK(spec.frequency_offset(j, h) == expected);
    }
  }
}

TEST_CASE("coefficient dimension") {
  CHECK(preset9().coefficient_dim() == 10);  // 1 + 3 AR + 6 covariates

  ModelSpec intercept_only;
  intercept_only.n_countries = 1;
  intercept_only.hours_per_day = 24;
  intercept_only.validate();
  CHECK(intercept_only.coefficient_dim() == 1);

  ModelSpec mixed;
  mixed.n_countries = 2;
  mixed.hours_per_day = 4;
  mixed.ar_lags = {4, 8};
  mixed.covariates = {{"a", Frequency::High, 1}, {"b", Frequency::Low, 0}};
  mixed.validate();
  CHECK(mixed.coefficient_dim() == 6);  // 1 + 2 + (2 + 1)
}

TEST_CASE("validation rejects inconsistent specs") {
  ModelSpec bad = preset9();
  bad.ar_lags = {48, 24};  // not ascending
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = preset9();
  bad.ar_lags = {0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = preset9();
  bad.n_countries = 0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = preset9();
  bad.covariates.push_back({"demand", Frequency::Low, 0});  // duplicate name
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = preset9();
  bad.covariates[0].max_lag = -1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("coefficient layout indices and names") {
  ModelSpec spec;
  spec.n_countries = 2;
  spec.hours_per_day = 2;
  spec.ar_lags = {2, 4};
  spec.covariates = {{"a", Frequency::High, 1}, {"b", Frequency::Low, 0}};
  spec.validate();
  const CoefLayout layout(spec);
  CHECK(layout.dim() == spec.coefficient_dim());
  CHECK(layout.intercept_index() == 0);
  CHECK(layout.alpha_index(0) == 1);
  CHECK(layout.alpha_index(1) == 2);
  CHECK(layout.beta_index(0, 0) == 3);
  CHECK(layout.beta_index(0, 1) == 4);
  CHECK(layout.beta_index(1, 0) == 5);
  CHECK(layout.names()[0] == "mu");
  CHECK(layout.names()[3].find("a") != std::string::npos);

  const auto diag = layout.block_diagonal(1.0, 2.0, 3.0);
  CHECK(diag[0] == 1.0);
  CHECK(diag[1] == 2.0);
  CHECK(diag[2] == 2.0);
  CHECK(diag[3] == 3.0);
  CHECK(diag[5] == 3.0);
}

TEST_CASE("prior and sampler defaults") {
  const PriorConfig prior;
  CHECK(prior.s0 == 10.0);
  CHECK(prior.r0 == 10.0);
  CHECK(prior.n0 == 0.1);
  CHECK(prior.m0 == 0.1);
  CHECK(prior.v1 == 0.1);
  CHECK(prior.w3 == 0.1);
  prior.validate();
  PriorConfig bad = prior;
  bad.s0 = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  const SamplerConfig cfg;
  CHECK(cfg.burn_in == 3000);
  CHECK(cfg.retained == 10000);
  CHECK(cfg.thin == 1);
  SamplerConfig bad2 = cfg;
  bad2.retained = 0;
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

TEST_CASE("config JSON round-trips bit-exactly") {
  const ModelSpec spec = preset9();
  const nlohmann::json j1 = spec;
  const ModelSpec back = j1.get<ModelSpec>();
  const nlohmann::json j2 = back;
  CHECK(j1.dump() == j2.dump());

  PriorConfig prior;
  prior.s0 = 3.25;
  const nlohmann::json p1 = prior;
  CHECK(p1.dump() == nlohmann::json(p1.get<PriorConfig>()).dump());

  SamplerConfig cfg;
  cfg.seed = 123456789;
  cfg.thin = 5;
  const nlohmann::json c1 = cfg;
  CHECK(c1.dump() == nlohmann::json(c1.get<SamplerConfig>()).dump());
}

TEST_CASE("config hash distinguishes configs and is stable") {
  const nlohmann::json a = preset9();
  const nlohmann::json b = ModelSpec::daily_preset(8);
  CHECK(config_hash(a) == config_hash(a));
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}
