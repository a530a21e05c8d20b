#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prumidas/panel_data.hpp"

namespace prumidas {

// Fills z = [1, y lags in ar_lags order, covariate lags] for observation
// (g, day t, hour h). Layout matches CoefLayout. Requires full lag history.
void build_regressor(const PanelDataset& data, int g, int t, int h,
                     Eigen::Ref<Eigen::VectorXd> z);
Eigen::VectorXd build_regressor(const PanelDataset& data, int g, int t, int h);

// H x L block with row h = z_{g,t+h}', plus the matching target vector.
struct DesignBlock {
  Eigen::MatrixXd Z;  // H x L
  Eigen::VectorXd y;  // H
};
DesignBlock build_block(const PanelDataset& data, int g, int t);

// Enumeration of the estimation observations, g-major then day then hour.
struct ObservationIndex {
  int g, t, h;
  int flat;
};
void for_each_observation(const PanelDataset& data,
                          const std::function<void(const ObservationIndex&)>& fn);

// Estimation sample flattened for the sampler kernels: row-major design
// matrix plus per-observation hour/country tags.
struct FlatDesign {
  int n_obs = 0, L = 0, H = 0, G = 0;
  std::vector<double> y;        // n_obs
  std::vector<double> Z;        // n_obs * L, row-major
  std::vector<std::int32_t> hour;
  std::vector<std::int32_t> country;

  const double* row(int i) const { return Z.data() + static_cast<std::size_t>(i) * L; }
};
FlatDesign flatten_design(const PanelDataset& data);

// Debug export of one block as CSV.
void export_block_csv(const PanelDataset& data, int g, int t, const std::string& path);

}  // namespace prumidas
