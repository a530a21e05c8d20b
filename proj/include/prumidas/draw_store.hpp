#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prumidas/model_config.hpp"

namespace prumidas {

// Retained posterior draws, one row per draw. Column layout:
//   gamma (L) | sigma2 | lambda (H) | chi (G) | q_mu q_alpha q_beta |
//   r_mu r_alpha r_beta | [psi (H*L, row-major) | zeta (G*L, row-major)]
// The trailing random-effect block is present iff store_random_effects.
class DrawStore {
 public:
  DrawStore() = default;
  DrawStore(const ModelSpec& spec, const SamplerConfig& cfg, const std::string& cfg_hash);

  int n_cols() const { return n_cols_; }
  int n_draws() const { return static_cast<int>(rows_.size()) / n_cols_; }
  bool has_random_effects() const { return store_effects_; }
  const ModelSpec& spec() const { return spec_; }
  const SamplerConfig& sampler_config() const { return sampler_; }
  const std::string& config_hash() const { return cfg_hash_; }
  const std::vector<std::string>& column_names() const { return names_; }

  void append(const Eigen::VectorXd& row);
  double at(int draw, int col) const { return rows_[static_cast<std::size_t>(draw) * n_cols_ + col]; }
  // All draws of one column.
  std::vector<double> column(int col) const;

  // Column index helpers.
  int col_gamma(int k) const { return k; }
  int col_sigma2() const { return L_; }
  int col_lambda(int h) const { return L_ + 1 + h; }
  int col_chi(int g) const { return L_ + 1 + H_ + g; }
  int col_q(int block) const { return L_ + 1 + H_ + G_ + block; }      // 0=mu,1=alpha,2=beta
  int col_r(int block) const { return L_ + 1 + H_ + G_ + 3 + block; }
  int col_psi(int h, int k) const;
  int col_zeta(int g, int k) const;

  // <basename>.json header + <basename>.bin little-endian doubles.
  void save(const std::string& basename) const;
  static DrawStore load(const std::string& basename);

 private:
  void init_layout();

  ModelSpec spec_;
  SamplerConfig sampler_;
  std::string cfg_hash_;
  bool store_effects_ = false;
  int L_ = 0, H_ = 0, G_ = 0, n_cols_ = 0;
  std::vector<std::string> names_;
  std::vector<double> rows_;
};

}  // namespace prumidas
