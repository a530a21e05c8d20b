#include "prumidas/gibbs.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "prumidas/gig.hpp"

namespace prumidas {

namespace {

constexpr double kVarianceFloor = 1e-12;

double floor_variance(double v, const char* name) {
  if (v < kVarianceFloor) {
    std::fprintf(stderr, "warning: %s draw %.3e floored at %.0e\n", name, v, kVarianceFloor);
    return kVarianceFloor;
  }
  return v;
}

// x = mean + U^{-1} xi with P = U'U the posterior precision.
Eigen::VectorXd mvn_from_precision(const Eigen::LLT<Eigen::MatrixXd>& llt,
                                   const Eigen::VectorXd& rhs, Rng& rng) {
  const Eigen::VectorXd mean = llt.solve(rhs);
  Eigen::VectorXd xi(rhs.size());
  for (int i = 0; i < xi.size(); ++i) xi[i] = rng.normal();
  return mean + llt.matrixU().solve(xi);
}

}  // namespace

ParameterState ParameterState::zeros(const ModelSpec& spec) {
  const int L = spec.coefficient_dim();
  ParameterState s;
  s.gamma = Eigen::VectorXd::Zero(L);
  s.psi = Eigen::MatrixXd::Zero(spec.hours_per_day, L);
  s.zeta = Eigen::MatrixXd::Zero(spec.n_countries, L);
  s.lambda = Eigen::VectorXd::Ones(spec.hours_per_day);
  s.chi = Eigen::VectorXd::Ones(spec.n_countries);
  return s;
}

Eigen::MatrixXd ParameterState::sigma2_gh() const {
  Eigen::MatrixXd out(chi.size(), lambda.size());
  for (int g = 0; g < chi.size(); ++g) {
    for (int h = 0; h < lambda.size(); ++h) {
      out(g, h) = sigma2 / (lambda[h] * chi[g]);
    }
  }
  return out;
}

void ParameterState::check_positive() const {
  const bool ok = sigma2 > 0.0 && (lambda.array() > 0.0).all() &&
                  (chi.array() > 0.0).all() && q_mu > 0.0 && q_alpha > 0.0 &&
                  q_beta > 0.0 && r_mu > 0.0 && r_alpha > 0.0 && r_beta > 0.0;
  if (!ok) throw std::runtime_error("non-positive variance component in Gibbs state");
}

EffectCovariances EffectCovariances::from_state(const CoefLayout& layout,
                                                const ParameterState& s) {
  EffectCovariances out;
  const auto q = layout.block_diagonal(s.q_mu, s.q_alpha, s.q_beta);
  const auto r = layout.block_diagonal(s.r_mu, s.r_alpha, s.r_beta);
  out.q_diag = Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());
  out.r_diag = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  return out;
}

double marginal_variance(const Eigen::VectorXd& z, double sigma2_gh,
                         const Eigen::VectorXd& q_diag, const Eigen::VectorXd& r_diag) {
  if (!z.allFinite() || !(sigma2_gh > 0.0)) {
    throw std::invalid_argument("marginal_variance: non-finite input");
  }
  return sigma2_gh + (z.array().square() * (q_diag.array() + r_diag.array())).sum();
}

GibbsSampler::GibbsSampler(const PanelDataset& data, const PriorConfig& prior,
                           const SamplerConfig& cfg)
    : GibbsSampler(flatten_design(data), data.spec, prior, cfg) {}

GibbsSampler::GibbsSampler(FlatDesign design, const ModelSpec& spec,
                           const PriorConfig& prior, const SamplerConfig& cfg)
    : fd_(std::move(design)), spec_(spec), prior_(prior), cfg_(cfg), layout_(spec) {
  prior_.validate();
  cfg_.validate();
}

Eigen::VectorXd GibbsSampler::prior_precision_diag() const {
  Eigen::VectorXd d = Eigen::VectorXd::Constant(layout_.dim(), 1.0 / (prior_.r0 * prior_.r0));
  d[0] = 1.0 / (prior_.s0 * prior_.s0);
  return d;
}

Eigen::LLT<Eigen::MatrixXd> GibbsSampler::factorize(Eigen::MatrixXd m, const char* what) {
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * m.trace() / m.rows();
  m.diagonal().array() += jitter;
  llt.compute(m);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error(std::string("precision matrix not positive definite in ") + what);
  }
  return llt;
}

ParameterState GibbsSampler::initial_state(double jitter, Rng* rng) const {
  ParameterState s = ParameterState::zeros(spec_);
  // Unit-weight ridge fit for gamma, residual variance for sigma^2.
  std::vector<double> unit_var(fd_.n_obs, 1.0);
  kernels::NormalEq eq = kernels::weighted_normal_eq(fd_, unit_var);
  Eigen::MatrixXd P = eq.XtWX;
  P.diagonal() += prior_precision_diag();
  s.gamma = factorize(P, "initial_state").solve(eq.XtWy);
  const Eigen::MatrixXd S = kernels::residual_ss(fd_, s.gamma, s.psi, s.zeta);
  s.sigma2 = std::max(S.sum() / std::max(1, fd_.n_obs), kVarianceFloor);
  if (jitter > 0.0 && rng != nullptr) {
    for (int k = 0; k < s.gamma.size(); ++k) s.gamma[k] *= std::exp(jitter * rng->normal());
    s.sigma2 *= std::exp(jitter * rng->normal());
  }
  return s;
}

void GibbsSampler::draw_gamma(ParameterState& s, Rng& rng) const {
  kernels::NormalEq eq;
  if (cfg_.non_marginalized_gamma) {
    std::vector<double> w(fd_.n_obs);
    for (int i = 0; i < fd_.n_obs; ++i) {
      w[i] = s.lambda[fd_.hour[i]] * s.chi[fd_.country[i]] / s.sigma2;
    }
    eq = kernels::weighted_normal_eq_residual(fd_, s.psi, s.zeta, w);
  } else {
    const EffectCovariances qr = EffectCovariances::from_state(layout_, s);
    const Eigen::VectorXd qr_diag = qr.q_diag + qr.r_diag;
    std::vector<double> var;
    kernels::marginal_variances(fd_, s.sigma2_gh(), qr_diag, var);
    eq = kernels::weighted_normal_eq(fd_, var);
  }
  Eigen::MatrixXd P = eq.XtWX;
  P.diagonal() += prior_precision_diag();
  if (!P.allFinite()) throw std::runtime_error("non-finite precision in draw_gamma");
  s.gamma = mvn_from_precision(factorize(std::move(P), "draw_gamma"), eq.XtWy, rng);
}

void GibbsSampler::draw_random_effects(ParameterState& s, Rng& rng) const {
  const int L = layout_.dim(), H = fd_.H, G = fd_.G;
  const int D = (H + G) * L;
  const kernels::EffectCells cells =
      kernels::effect_cells(fd_, s.gamma, s.lambda, s.chi, s.sigma2);
  const EffectCovariances qr = EffectCovariances::from_state(layout_, s);

  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(D, D);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(D);
  for (int h = 0; h < H; ++h) {
    auto block = M.block(h * L, h * L, L, L);
    for (int g = 0; g < G; ++g) block += cells.C[h * G + g];
    block.diagonal() += qr.q_diag.cwiseInverse();
    for (int g = 0; g < G; ++g) rhs.segment(h * L, L) += cells.d[h * G + g];
  }
  for (int g = 0; g < G; ++g) {
    auto block = M.block((H + g) * L, (H + g) * L, L, L);
    for (int h = 0; h < H; ++h) block += cells.C[h * G + g];
    block.diagonal() += qr.r_diag.cwiseInverse();
    for (int h = 0; h < H; ++h) rhs.segment((H + g) * L, L) += cells.d[h * G + g];
  }
  for (int h = 0; h < H; ++h) {
    for (int g = 0; g < G; ++g) {
      M.block(h * L, (H + g) * L, L, L) = cells.C[h * G + g];
      M.block((H + g) * L, h * L, L, L) = cells.C[h * G + g];
    }
  }

  const Eigen::VectorXd draw =
      mvn_from_precision(factorize(std::move(M), "draw_random_effects"), rhs, rng);
  for (int h = 0; h < H; ++h) s.psi.row(h) = draw.segment(h * L, L).transpose();
  for (int g = 0; g < G; ++g) s.zeta.row(g) = draw.segment((H + g) * L, L).transpose();
}

void GibbsSampler::draw_variances(ParameterState& s, Rng& rng) const {
  const int H = fd_.H, G = fd_.G;
  const int days = fd_.n_obs / (G * H);
  const Eigen::MatrixXd S = kernels::residual_ss(fd_, s.gamma, s.psi, s.zeta);

  // sigma^2 | rest: conjugate inverse gamma.
  {
    double weighted = 0.0;
    for (int g = 0; g < G; ++g) {
      for (int h = 0; h < H; ++h) weighted += s.lambda[h] * s.chi[g] * S(g, h);
    }
    double rate = prior_.w1 + 0.5 * weighted;
    if (corrupt_sigma2_) rate *= 0.5;
    s.sigma2 = floor_variance(
        rng.inv_gamma(prior_.v1 + 0.5 * fd_.n_obs, rate), "sigma2");
  }

  // lambda_h | rest: GIG under the inverse gamma prior (the likelihood is
  // Gamma-shaped in lambda_h). The reparametrized variant treats lambda as a
  // precision multiplier with a Gamma prior, giving a conjugate Gamma draw.
  const int n_h = G * days;
  for (int h = 0; h < H; ++h) {
    double c = 0.0;
    for (int g = 0; g < G; ++g) c += s.chi[g] * S(g, h);
    c /= 2.0 * s.sigma2;
    double draw;
    if (n_h == 0 || c == 0.0) {
      draw = rng.inv_gamma(prior_.v2, prior_.w2);
    } else if (cfg_.gamma_variance_multipliers) {
      draw = rng.gamma(prior_.v2 + 0.5 * n_h, prior_.w2 + c);
    } else {
      draw = gig_draw(rng, 0.5 * n_h - prior_.v2, 2.0 * c, 2.0 * prior_.w2);
    }
    s.lambda[h] = floor_variance(draw, "lambda");
  }

  const int n_g = H * days;
  for (int g = 0; g < G; ++g) {
    double c = 0.0;
    for (int h = 0; h < H; ++h) c += s.lambda[h] * S(g, h);
    c /= 2.0 * s.sigma2;
    double draw;
    if (n_g == 0 || c == 0.0) {
      draw = rng.inv_gamma(prior_.v3, prior_.w3);
    } else if (cfg_.gamma_variance_multipliers) {
      draw = rng.gamma(prior_.v3 + 0.5 * n_g, prior_.w3 + c);
    } else {
      draw = gig_draw(rng, 0.5 * n_g - prior_.v3, 2.0 * c, 2.0 * prior_.w3);
    }
    s.chi[g] = floor_variance(draw, "chi");
  }
}

void GibbsSampler::draw_q_r(ParameterState& s, Rng& rng) const {
  const int H = fd_.H, G = fd_.G;
  const int n_alpha = layout_.n_alpha();
  const int n_beta = layout_.dim() - 1 - n_alpha;

  const auto block_ss = [&](const Eigen::MatrixXd& m, int lo, int len) {
    return len > 0 ? m.middleCols(lo, len).array().square().sum() : 0.0;
  };

  s.q_mu = floor_variance(
      rng.inv_gamma(prior_.n0 + 0.5 * H, prior_.m0 + 0.5 * block_ss(s.psi, 0, 1)), "q_mu");
  if (n_alpha > 0) {
    s.q_alpha = floor_variance(
        rng.inv_gamma(prior_.n0 + 0.5 * H * n_alpha,
                      prior_.m0 + 0.5 * block_ss(s.psi, 1, n_alpha)),
        "q_alpha");
  }
  if (n_beta > 0) {
    s.q_beta = floor_variance(
        rng.inv_gamma(prior_.n0 + 0.5 * H * n_beta,
                      prior_.m0 + 0.5 * block_ss(s.psi, 1 + n_alpha, n_beta)),
        "q_beta");
  }
  s.r_mu = floor_variance(
      rng.inv_gamma(prior_.n0 + 0.5 * G, prior_.m0 + 0.5 * block_ss(s.zeta, 0, 1)), "r_mu");
  if (n_alpha > 0) {
    s.r_alpha = floor_variance(
        rng.inv_gamma(prior_.n0 + 0.5 * G * n_alpha,
                      prior_.m0 + 0.5 * block_ss(s.zeta, 1, n_alpha)),
        "r_alpha");
  }
  if (n_beta > 0) {
    s.r_beta = floor_variance(
        rng.inv_gamma(prior_.n0 + 0.5 * G * n_beta,
                      prior_.m0 + 0.5 * block_ss(s.zeta, 1 + n_alpha, n_beta)),
        "r_beta");
  }
}

void GibbsSampler::sweep(ParameterState& s, Rng& rng) const {
  draw_gamma(s, rng);
  draw_random_effects(s, rng);
  draw_variances(s, rng);
  draw_q_r(s, rng);
  s.check_positive();
}

DrawStore GibbsSampler::run_chain(Rng& rng, const std::string& config_hash,
                                  const std::function<void(int, int)>& progress) const {
  DrawStore store(spec_, cfg_, config_hash);
  ParameterState s = initial_state();
  const int total = cfg_.burn_in + cfg_.retained * cfg_.thin;
  int retained = 0;
  for (int it = 0; it < total; ++it) {
    sweep(s, rng);
    if (it >= cfg_.burn_in && (it - cfg_.burn_in) % cfg_.thin == cfg_.thin - 1) {
      store.append(state_to_row(s));
      ++retained;
    }
    if (progress) progress(it + 1, total);
  }
  if (retained != cfg_.retained) throw std::logic_error("retained draw count mismatch");
  return store;
}

Eigen::VectorXd GibbsSampler::state_to_row(const ParameterState& s) const {
  const int L = layout_.dim(), H = fd_.H, G = fd_.G;
  const int base = L + 1 + H + G + 6;
  Eigen::VectorXd row(cfg_.store_random_effects ? base + (H + G) * L : base);
  row.head(L) = s.gamma;
  row[L] = s.sigma2;
  row.segment(L + 1, H) = s.lambda;
  row.segment(L + 1 + H, G) = s.chi;
  row.segment(L + 1 + H + G, 6) << s.q_mu, s.q_alpha, s.q_beta, s.r_mu, s.r_alpha, s.r_beta;
  if (cfg_.store_random_effects) {
    for (int h = 0; h < H; ++h) row.segment(base + h * L, L) = s.psi.row(h).transpose();
    for (int g = 0; g < G; ++g) {
      row.segment(base + (H + g) * L, L) = s.zeta.row(g).transpose();
    }
  }
  return row;
}

ParameterState GibbsSampler::row_to_state(const DrawStore& store, int draw) const {
  ParameterState s = ParameterState::zeros(spec_);
  const int L = layout_.dim(), H = fd_.H, G = fd_.G;
  for (int k = 0; k < L; ++k) s.gamma[k] = store.at(draw, store.col_gamma(k));
  s.sigma2 = store.at(draw, store.col_sigma2());
  for (int h = 0; h < H; ++h) s.lambda[h] = store.at(draw, store.col_lambda(h));
  for (int g = 0; g < G; ++g) s.chi[g] = store.at(draw, store.col_chi(g));
  s.q_mu = store.at(draw, store.col_q(0));
  s.q_alpha = store.at(draw, store.col_q(1));
  s.q_beta = store.at(draw, store.col_q(2));
  s.r_mu = store.at(draw, store.col_r(0));
  s.r_alpha = store.at(draw, store.col_r(1));
  s.r_beta = store.at(draw, store.col_r(2));
  if (store.has_random_effects()) {
    for (int h = 0; h < H; ++h) {
      for (int k = 0; k < L; ++k) s.psi(h, k) = store.at(draw, store.col_psi(h, k));
    }
    for (int g = 0; g < G; ++g) {
      for (int k = 0; k < L; ++k) s.zeta(g, k) = store.at(draw, store.col_zeta(g, k));
    }
  }
  return s;
}

}  // namespace prumidas
