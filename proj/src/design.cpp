#include "prumidas/design.hpp"

#include <fstream>
#include <stdexcept>

namespace prumidas {

void build_regressor(const PanelDataset& data, int g, int t, int h,
                     Eigen::Ref<Eigen::VectorXd> z) {
  const ModelSpec& spec = data.spec;
  const int H = spec.hours_per_day;
  const int u = t * H + h;  // flat high-frequency index
  const CountryData& cd = data.countries.at(g);

  int k = 0;
  z[k++] = 1.0;
  for (int a : spec.ar_lags) {
    const int src = u - a;
    if (src < 0) throw std::out_of_range("insufficient lag history for AR term");
    z[k++] = cd.y[src];
  }
  for (int j = 0; j < spec.n_covariates(); ++j) {
    const int hj = spec.frequency_offset(j, h);
    const int mult = spec.lag_multiplier(j);
    for (int b = 0; b <= spec.covariates[j].max_lag; ++b) {
      const int src = t * H + hj - b * mult;
      if (src < 0) throw std::out_of_range("insufficient lag history for covariate term");
      z[k++] = cd.x(src, j);
    }
  }
}

Eigen::VectorXd build_regressor(const PanelDataset& data, int g, int t, int h) {
  Eigen::VectorXd z(data.spec.coefficient_dim());
  build_regressor(data, g, t, h, z);
  return z;
}

DesignBlock build_block(const PanelDataset& data, int g, int t) {
  const int H = data.spec.hours_per_day;
  const int L = data.spec.coefficient_dim();
  DesignBlock blk;
  blk.Z.resize(H, L);
  blk.y.resize(H);
  Eigen::VectorXd z(L);
  for (int h = 0; h < H; ++h) {
    build_regressor(data, g, t, h, z);
    blk.Z.row(h) = z.transpose();
    blk.y[h] = data.countries[g].y[t * H + h];
  }
  return blk;
}

void for_each_observation(const PanelDataset& data,
                          const std::function<void(const ObservationIndex&)>& fn) {
  const int H = data.spec.hours_per_day;
  int flat = 0;
  for (int g = 0; g < data.spec.n_countries; ++g) {
    for (int t = data.presample_days; t < data.n_days; ++t) {
      for (int h = 0; h < H; ++h) {
        fn(ObservationIndex{g, t, h, flat++});
      }
    }
  }
}

FlatDesign flatten_design(const PanelDataset& data) {
  FlatDesign fd;
  fd.L = data.spec.coefficient_dim();
  fd.H = data.spec.hours_per_day;
  fd.G = data.spec.n_countries;
  fd.n_obs = data.n_obs();
  fd.y.resize(fd.n_obs);
  fd.Z.resize(static_cast<std::size_t>(fd.n_obs) * fd.L);
  fd.hour.resize(fd.n_obs);
  fd.country.resize(fd.n_obs);
  Eigen::VectorXd z(fd.L);
  for_each_observation(data, [&](const ObservationIndex& o) {
    build_regressor(data, o.g, o.t, o.h, z);
    for (int k = 0; k < fd.L; ++k) fd.Z[static_cast<std::size_t>(o.flat) * fd.L + k] = z[k];
    fd.y[o.flat] = data.countries[o.g].y[o.t * fd.H + o.h];
    fd.hour[o.flat] = o.h;
    fd.country[o.flat] = o.g;
  });
  return fd;
}

void export_block_csv(const PanelDataset& data, int g, int t, const std::string& path) {
  const DesignBlock blk = build_block(data, g, t);
  const CoefLayout layout(data.spec);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "h,y";
  for (const auto& n : layout.names()) out << "," << n;
  out << "\n";
  for (int h = 0; h < blk.Z.rows(); ++h) {
    out << h << "," << blk.y[h];
    for (int k = 0; k < blk.Z.cols(); ++k) out << "," << blk.Z(h, k);
    out << "\n";
  }
}

}  // namespace prumidas
