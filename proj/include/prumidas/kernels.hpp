#pragma once

#include <vector>

#include <Eigen/Dense>

#include "prumidas/design.hpp"

namespace prumidas {
namespace kernels {

// Global switch between the OpenMP kernels and the serial reference path.
// The parallel kernels use fixed partitions combined in a fixed order, so
// results are reproducible for a given seed independent of thread count.
void set_parallel(bool on);
bool parallel_enabled();

// Per-observation marginalized variances sigma^2_{gh,t} = sigma^2_gh + z'(Q+R)z.
// sigma2_gh is G x H, qr_diag the diagonal of Q + R.
void marginal_variances(const FlatDesign& fd, const Eigen::MatrixXd& sigma2_gh,
                        const Eigen::VectorXd& qr_diag, std::vector<double>& out);

// Weighted normal-equation accumulators: XtWX = sum_i w_i z_i z_i',
// XtWy = sum_i w_i z_i y_i with w_i = 1 / var_i.
struct NormalEq {
  Eigen::MatrixXd XtWX;
  Eigen::VectorXd XtWy;
};
NormalEq weighted_normal_eq(const FlatDesign& fd, const std::vector<double>& var);
NormalEq weighted_normal_eq_serial(const FlatDesign& fd, const std::vector<double>& var);

// As above but against a residual target r_i = y_i - z_i' offset_i, where the
// offset is psi_h + zeta_g; used by the non-marginalized gamma draw.
NormalEq weighted_normal_eq_residual(const FlatDesign& fd,
                                     const Eigen::MatrixXd& psi,
                                     const Eigen::MatrixXd& zeta,
                                     const std::vector<double>& weight);

// Per-(hour, country) cell sufficient statistics for the joint random-effect
// draw: C[h*G+g] = sum_t w z z', d[h*G+g] = sum_t w (y - z'gamma) z, with
// w = lambda_h chi_g / sigma^2.
struct EffectCells {
  int H = 0, G = 0, L = 0;
  std::vector<Eigen::MatrixXd> C;  // H*G blocks, L x L
  std::vector<Eigen::VectorXd> d;  // H*G blocks, L
};
EffectCells effect_cells(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                         const Eigen::VectorXd& lambda, const Eigen::VectorXd& chi,
                         double sigma2);
EffectCells effect_cells_serial(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& lambda, const Eigen::VectorXd& chi,
                                double sigma2);

// Residual sums of squares per (country, hour): S(g,h) = sum_t e^2 with
// e = y - z'(gamma + psi_h + zeta_g).
Eigen::MatrixXd residual_ss(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                            const Eigen::MatrixXd& psi, const Eigen::MatrixXd& zeta);
Eigen::MatrixXd residual_ss_serial(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                                   const Eigen::MatrixXd& psi, const Eigen::MatrixXd& zeta);

}  // namespace kernels
}  // namespace prumidas
