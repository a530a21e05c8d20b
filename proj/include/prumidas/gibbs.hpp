#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "prumidas/design.hpp"
#include "prumidas/draw_store.hpp"
#include "prumidas/kernels.hpp"
#include "prumidas/rng.hpp"

namespace prumidas {

// One Gibbs state. psi and zeta rows share gamma's coefficient layout.
struct ParameterState {
  Eigen::VectorXd gamma;   // L
  Eigen::MatrixXd psi;     // H x L, hourly random effects
  Eigen::MatrixXd zeta;    // G x L, country random effects
  double sigma2 = 1.0;
  Eigen::VectorXd lambda;  // H
  Eigen::VectorXd chi;     // G
  double q_mu = 1.0, q_alpha = 1.0, q_beta = 1.0;
  double r_mu = 1.0, r_alpha = 1.0, r_beta = 1.0;

  static ParameterState zeros(const ModelSpec& spec);
  // Composite sigma^2 / (lambda_h chi_g), the identified error variance.
  Eigen::MatrixXd sigma2_gh() const;  // G x H
  void check_positive() const;        // throws on a non-positive variance component
};

// Diagonals of the random-effect prior covariances Q and R under the layout.
struct EffectCovariances {
  Eigen::VectorXd q_diag, r_diag;
  static EffectCovariances from_state(const CoefLayout& layout, const ParameterState& s);
};

// sigma^2_{gh,t} = sigma^2_gh + z'(R+Q)z for a single regressor vector.
double marginal_variance(const Eigen::VectorXd& z, double sigma2_gh,
                         const Eigen::VectorXd& q_diag, const Eigen::VectorXd& r_diag);

// The multi-move sampler: Rao-Blackwellized common-coefficient draw, joint
// random-effect draw, then the variance blocks.
class GibbsSampler {
 public:
  GibbsSampler(const PanelDataset& data, const PriorConfig& prior,
               const SamplerConfig& cfg);
  GibbsSampler(FlatDesign design, const ModelSpec& spec, const PriorConfig& prior,
               const SamplerConfig& cfg);

  const FlatDesign& design() const { return fd_; }
  FlatDesign& design_mut() { return fd_; }
  const CoefLayout& layout() const { return layout_; }

  ParameterState initial_state(double jitter = 0.0, Rng* rng = nullptr) const;

  void draw_gamma(ParameterState& s, Rng& rng) const;
  void draw_random_effects(ParameterState& s, Rng& rng) const;
  // sigma^2, lambda, chi from the shared residual sums of squares.
  void draw_variances(ParameterState& s, Rng& rng) const;
  void draw_q_r(ParameterState& s, Rng& rng) const;

  void sweep(ParameterState& s, Rng& rng) const;

  // Burn-in, then retained draws (every thin-th sweep) into a DrawStore.
  DrawStore run_chain(Rng& rng, const std::string& config_hash,
                      const std::function<void(int, int)>& progress = {}) const;

  Eigen::VectorXd state_to_row(const ParameterState& s) const;
  ParameterState row_to_state(const DrawStore& store, int draw) const;

  // Test hook: halves the sigma^2 conditional rate (deliberately wrong).
  void corrupt_sigma2_update(bool on) { corrupt_sigma2_ = on; }

 private:
  Eigen::VectorXd prior_precision_diag() const;
  // Cholesky with a single trace-scaled jitter retry.
  static Eigen::LLT<Eigen::MatrixXd> factorize(Eigen::MatrixXd m, const char* what);

  FlatDesign fd_;
  ModelSpec spec_;
  PriorConfig prior_;
  SamplerConfig cfg_;
  CoefLayout layout_;
  bool corrupt_sigma2_ = false;
};

}  // namespace prumidas
