#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "prumidas/gibbs.hpp"
#include "prumidas/simulate.hpp"

using namespace prumidas;
namespace fs = std::filesystem;

namespace {

ModelSpec small_spec(int G = 2, int H = 2) {
  ModelSpec spec;
  spec.n_countries = G;
  spec.hours_per_day = H;
  spec.ar_lags = {H};
  spec.covariates = {{"wind", Frequency::High, 0}, {"gas", Frequency::Low, 0}};
  spec.validate();
  return spec;
}

PanelDataset small_panel(const ModelSpec& spec, int days, std::uint64_t seed = 21) {
  TrueParameters truth;
  truth.state = ParameterState::zeros(spec);
  const CoefLayout layout(spec);
  truth.state.gamma[layout.alpha_index(0)] = 0.4;
  truth.state.gamma[layout.beta_index(0)] = 1.0;
  if (spec.n_covariates() > 1) truth.state.gamma[layout.beta_index(1)] = -0.5;
  truth.state.q_mu = truth.state.q_alpha = truth.state.q_beta = 0.02;
  truth.state.r_mu = truth.state.r_alpha = truth.state.r_beta = 0.02;
  ScenarioConfig scen;
  scen.n_days = days;
  scen.spin_up_days = 6;
  Rng rng(seed);
  return generate_panel(spec, truth, scen, rng).dataset;
}

FlatDesign empty_design(int G, int H, int L) {
  FlatDesign fd;
  fd.G = G;
  fd.H = H;
  fd.L = L;
  fd.n_obs = 0;
  return fd;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("marginal variance closed-form cases") {
  const Eigen::VectorXd z = (Eigen::VectorXd(3) << 1.0, 0.0, 0.0).finished();
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
  CHECK(marginal_variance(z, 2.5, zero, zero) == 2.5);
  const Eigen::VectorXd q = (Eigen::VectorXd(3) << 0.3, 0.7, 0.9).finished();
  const Eigen::VectorXd r = (Eigen::VectorXd(3) << 0.2, 0.1, 0.4).finished();
  CHECK(marginal_variance(z, 2.5, q, r) == doctest::Approx(2.5 + 0.3 + 0.2));
  Eigen::VectorXd bad = z;
  bad[1] = std::nan("");
  CHECK_THROWS_AS(marginal_variance(bad, 1.0, q, r), std::invalid_argument);
}

TEST_CASE("marginal variance matches a Monte Carlo oracle") {
  Rng rng(31);
  for (int rep = 0; rep < 3; ++rep) {
    const int L = 4;
    Eigen::VectorXd z(L), q(L), r(L);
    for (int k = 0; k < L; ++k) {
      z[k] = rng.normal();
      q[k] = 0.2 + rng.uniform();
      r[k] = 0.2 + rng.uniform();
    }
    const double sigma2_gh = 0.5 + rng.uniform();
    const int n = 1000000;
    double m = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = rng.normal(0.0, std::sqrt(sigma2_gh));
      for (int k = 0; k < L; ++k) {
        v += z[k] * (rng.normal(0.0, std::sqrt(q[k])) + rng.normal(0.0, std::sqrt(r[k])));
      }
      m += v;
      s2 += v * v;
    }
    m /= n;
    s2 = s2 / n - m * m;
    const double expect = marginal_variance(z, sigma2_gh, q, r);
    CHECK(std::abs(s2 - expect) < 0.01 * expect);
  }
}

TEST_CASE("gamma draw matches the conjugate oracle with effects off") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 25);
  PriorConfig prior;
  prior.s0 = prior.r0 = 5.0;
  SamplerConfig cfg;
  const GibbsSampler sampler(data, prior, cfg);

  ParameterState s = ParameterState::zeros(spec);
  s.sigma2 = 0.7;
  s.lambda << 1.2, 0.8;
  s.chi << 0.9, 1.4;
  s.q_mu = s.q_alpha = s.q_beta = 0.0;  // effects marginalized out entirely
  s.r_mu = s.r_alpha = s.r_beta = 0.0;

  const ConjugatePosterior oracle = conjugate_oracle(sampler.design(), s.sigma2_gh(), prior);
  const int n = 8000;
  Rng rng(7);
  const int L = spec.coefficient_dim();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(L);
  Eigen::MatrixXd m2 = Eigen::MatrixXd::Zero(L, L);
  for (int i = 0; i < n; ++i) {
    ParameterState si = s;
    sampler.draw_gamma(si, rng);
    mean += si.gamma;
    m2 += si.gamma * si.gamma.transpose();
  }
  mean /= n;
  const Eigen::MatrixXd cov = m2 / n - mean * mean.transpose();
  for (int k = 0; k < L; ++k) {
    const double se = std::sqrt(oracle.covariance(k, k) / n);
    CHECK(std::abs(mean[k] - oracle.mean[k]) < 4.0 * se);
    CHECK(cov(k, k) == doctest::Approx(oracle.covariance(k, k)).epsilon(0.1));
  }
}

TEST_CASE("gamma draw with no data is the prior") {
  const ModelSpec spec = small_spec();
  PriorConfig prior;  // s0 = r0 = 10
  SamplerConfig cfg;
  const GibbsSampler sampler(empty_design(2, 2, spec.coefficient_dim()), spec, prior, cfg);
  ParameterState s = ParameterState::zeros(spec);
  Rng rng(3);
  const int n = 20000;
  double m = 0.0, v = 0.0;
  for (int i = 0; i < n; ++i) {
    ParameterState si = s;
    sampler.draw_gamma(si, rng);
    m += si.gamma[0];
    v += si.gamma[0] * si.gamma[0];
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) < 4.0 * 10.0 / std::sqrt(n));
  CHECK(v == doctest::Approx(100.0).epsilon(0.05));  // s0^2 enters as 100
}

TEST_CASE("random effects with no data follow their prior") {
  const ModelSpec spec = small_spec();
  const GibbsSampler sampler(empty_design(2, 2, spec.coefficient_dim()), spec,
                             PriorConfig{}, SamplerConfig{});
  ParameterState s = ParameterState::zeros(spec);
  s.q_mu = 0.5;
  s.q_alpha = 0.8;
  s.q_beta = 0.3;
  s.r_mu = 0.9;
  s.r_alpha = 0.2;
  s.r_beta = 0.6;
  Rng rng(4);
  const int n = 20000;
  double v_psi0 = 0.0, v_zeta0 = 0.0, cross = 0.0;
  for (int i = 0; i < n; ++i) {
    ParameterState si = s;
    sampler.draw_random_effects(si, rng);
    v_psi0 += si.psi(0, 0) * si.psi(0, 0);
    v_zeta0 += si.zeta(1, 1) * si.zeta(1, 1);
    cross += si.psi(0, 0) * si.zeta(0, 0);
  }
  CHECK(v_psi0 / n == doctest::Approx(0.5).epsilon(0.05));   // q_mu
  CHECK(v_zeta0 / n == doctest::Approx(0.2).epsilon(0.05));  // r_alpha
  CHECK(std::abs(cross / n) < 0.03);                         // block-diagonal prior
}

TEST_CASE("joint effect draw matches a hand-assembled precision on a 1x1 panel") {
  ModelSpec spec;
  spec.n_countries = 1;
  spec.hours_per_day = 1;
  spec.ar_lags = {1};
  spec.covariates = {{"wind", Frequency::High, 0}};
  spec.validate();
  const PanelDataset data = small_panel(spec, 30);
  const GibbsSampler sampler(data, PriorConfig{}, SamplerConfig{});
  const FlatDesign& fd = sampler.design();
  const int L = fd.L;

  ParameterState s = ParameterState::zeros(spec);
  s.sigma2 = 0.6;
  s.q_mu = s.q_alpha = s.q_beta = 0.2;
  s.r_mu = s.r_alpha = s.r_beta = 0.3;
  s.gamma.setConstant(0.1);

  // Direct 2L-dimensional formula.
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(L, L);
  Eigen::VectorXd d = Eigen::VectorXd::Zero(L);
  for (int i = 0; i < fd.n_obs; ++i) {
    const Eigen::Map<const Eigen::VectorXd> z(fd.row(i), L);
    C += z * z.transpose() / s.sigma2;
    d += (fd.y[i] - z.dot(s.gamma)) * z / s.sigma2;
  }
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(2 * L, 2 * L);
  M.topLeftCorner(L, L) = C + Eigen::MatrixXd::Identity(L, L) / 0.2;
  M.bottomRightCorner(L, L) = C + Eigen::MatrixXd::Identity(L, L) / 0.3;
  M.topRightCorner(L, L) = C;
  M.bottomLeftCorner(L, L) = C;
  Eigen::VectorXd rhs(2 * L);
  rhs << d, d;
  const Eigen::VectorXd expect_mean = M.llt().solve(rhs);

  Rng rng(5);
  const int n = 40000;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(2 * L);
  for (int i = 0; i < n; ++i) {
    ParameterState si = s;
    sampler.draw_random_effects(si, rng);
    mean.head(L) += si.psi.row(0).transpose();
    mean.tail(L) += si.zeta.row(0).transpose();
  }
  mean /= n;
  const Eigen::MatrixXd cov = M.llt().solve(Eigen::MatrixXd::Identity(2 * L, 2 * L));
  for (int k = 0; k < 2 * L; ++k) {
    CHECK(std::abs(mean[k] - expect_mean[k]) < 5.0 * std::sqrt(cov(k, k) / n));
  }
}

TEST_CASE("q draw with zero effects reduces to the prior-rate inverse gamma") {
  ModelSpec spec = small_spec(3, 8);
  const GibbsSampler sampler(empty_design(3, 8, spec.coefficient_dim()), spec,
                             PriorConfig{}, SamplerConfig{});
  ParameterState s = ParameterState::zeros(spec);
  Rng rng(6);
  const int n = 400000;
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    ParameterState si = s;
    sampler.draw_q_r(si, rng);
    m += si.q_mu;
  }
  m /= n;
  const double shape = 0.1 + 0.5 * 8, rate = 0.1;  // psi = 0 leaves the prior rate
  CHECK(m == doctest::Approx(rate / (shape - 1.0)).epsilon(0.01));
}

TEST_CASE("sigma2 draw matches analytic inverse-gamma moments") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 20);
  const GibbsSampler sampler(data, PriorConfig{}, SamplerConfig{});
  ParameterState s = ParameterState::zeros(spec);
  s.gamma.setConstant(0.05);
  s.lambda << 1.5, 0.7;
  s.chi << 0.8, 1.1;

  const Eigen::MatrixXd S = kernels::residual_ss(sampler.design(), s.gamma, s.psi, s.zeta);
  double weighted = 0.0;
  for (int g = 0; g < 2; ++g) {
    for (int h = 0; h < 2; ++h) weighted += s.lambda[h] * s.chi[g] * S(g, h);
  }
  const double shape = 0.1 + 0.5 * sampler.design().n_obs;
  const double rate = 0.1 + 0.5 * weighted;

  Rng rng(8);
  const int n = 20000;
  double m = 0.0;
  for (int i = 0; i < n; ++i) {
    ParameterState si = s;
    sampler.draw_variances(si, rng);
    m += si.sigma2;
  }
  m /= n;
  CHECK(m == doctest::Approx(rate / (shape - 1.0)).epsilon(0.01));
}

TEST_CASE("sweeps are deterministic given the seed") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 20);
  const GibbsSampler sampler(data, PriorConfig{}, SamplerConfig{});
  ParameterState a = sampler.initial_state();
  ParameterState b = sampler.initial_state();
  Rng r1(42), r2(42);
  for (int i = 0; i < 5; ++i) {
    sampler.sweep(a, r1);
    sampler.sweep(b, r2);
  }
  CHECK((a.gamma.array() == b.gamma.array()).all());
  CHECK((a.psi.array() == b.psi.array()).all());
  CHECK(a.sigma2 == b.sigma2);
  CHECK((a.lambda.array() == b.lambda.array()).all());
  CHECK(a.q_beta == b.q_beta);
}

TEST_CASE("chains store the configured number of draws and reproduce bitwise") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 20);
  SamplerConfig cfg;
  cfg.burn_in = 10;
  cfg.retained = 30;
  cfg.thin = 3;
  cfg.seed = 12;
  const GibbsSampler sampler(data, PriorConfig{}, cfg);
  Rng r1(cfg.seed), r2(cfg.seed);
  const DrawStore s1 = sampler.run_chain(r1, "deadbeef");
  const DrawStore s2 = sampler.run_chain(r2, "deadbeef");
  CHECK(s1.n_draws() == 30);
  for (int i = 0; i < s1.n_draws(); ++i) {
    for (int c = 0; c < s1.n_cols(); ++c) CHECK(s1.at(i, c) == s2.at(i, c));
  }

  const fs::path base1 = fs::temp_directory_path() / "prumidas_chain_a";
  const fs::path base2 = fs::temp_directory_path() / "prumidas_chain_b";
  s1.save(base1.string());
  s2.save(base2.string());
  CHECK(read_bytes(base1.string() + ".bin") == read_bytes(base2.string() + ".bin"));

  const DrawStore loaded = DrawStore::load(base1.string());
  CHECK(loaded.n_draws() == s1.n_draws());
  CHECK(loaded.config_hash() == "deadbeef");
  for (int c = 0; c < s1.n_cols(); ++c) CHECK(loaded.at(7, c) == s1.at(7, c));
}

TEST_CASE("state round-trips through a draw-store row") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 20);
  SamplerConfig cfg;
  cfg.burn_in = 2;
  cfg.retained = 5;
  const GibbsSampler sampler(data, PriorConfig{}, cfg);
  Rng rng(9);
  const DrawStore store = sampler.run_chain(rng, "x");
  const ParameterState s = sampler.row_to_state(store, 3);
  const Eigen::VectorXd row = sampler.state_to_row(s);
  for (int c = 0; c < store.n_cols(); ++c) CHECK(row[c] == store.at(3, c));
  s.check_positive();
}

TEST_CASE("variance components stay positive along a chain") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 25);
  const GibbsSampler sampler(data, PriorConfig{}, SamplerConfig{});
  ParameterState s = sampler.initial_state();
  Rng rng(14);
  for (int i = 0; i < 60; ++i) {
    sampler.sweep(s, rng);  // sweep() itself asserts positivity
  }
  CHECK(s.sigma2 > 0.0);
  CHECK(s.lambda.minCoeff() > 0.0);
  CHECK(s.chi.minCoeff() > 0.0);
}

TEST_CASE("marginalized and conditional gamma draws target the same posterior") {
  const ModelSpec spec = small_spec();
  const PanelDataset data = small_panel(spec, 40);
  SamplerConfig cfg_m;
  cfg_m.burn_in = 300;
  cfg_m.retained = 3000;
  cfg_m.seed = 1;
  SamplerConfig cfg_c = cfg_m;
  cfg_c.non_marginalized_gamma = true;
  cfg_c.seed = 2;

  const auto mean_and_se = [&](const SamplerConfig& cfg) {
    const GibbsSampler sampler(data, PriorConfig{}, cfg);
    Rng rng(cfg.seed);
    const DrawStore store = sampler.run_chain(rng, "x");
    const int L = spec.coefficient_dim();
    Eigen::VectorXd mean(L), se(L);
    for (int k = 0; k < L; ++k) {
      const auto chain = store.column(store.col_gamma(k));
      double m = 0.0;
      for (double v : chain) m += v;
      m /= chain.size();
      double s2 = 0.0;
      for (double v : chain) s2 += (v - m) * (v - m);
      s2 /= chain.size();
      // Conservative autocorrelation adjustment via batch means.
      const int nb = 30, bs = static_cast<int>(chain.size()) / nb;
      double bvar = 0.0;
      for (int b = 0; b < nb; ++b) {
        double bm = 0.0;
        for (int i = 0; i < bs; ++i) bm += chain[b * bs + i];
        bm /= bs;
        bvar += (bm - m) * (bm - m);
      }
      bvar /= nb - 1;
      mean[k] = m;
      se[k] = std::sqrt(bvar / nb);
    }
    return std::make_pair(mean, se);
  };

  const auto [m1, se1] = mean_and_se(cfg_m);
  const auto [m2, se2] = mean_and_se(cfg_c);
  for (int k = 0; k < spec.coefficient_dim(); ++k) {
    const double se = std::sqrt(se1[k] * se1[k] + se2[k] * se2[k]);
    CHECK(std::abs(m1[k] - m2[k]) < 3.0 * se + 1e-12);
  }
}
