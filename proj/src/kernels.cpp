#include "prumidas/kernels.hpp"

#include <atomic>

namespace prumidas {
namespace kernels {

namespace {
std::atomic<bool> g_parallel{true};
constexpr int kChunks = 64;
}  // namespace

void set_parallel(bool on) { g_parallel.store(on); }
bool parallel_enabled() { return g_parallel.load(); }

void marginal_variances(const FlatDesign& fd, const Eigen::MatrixXd& sigma2_gh,
                        const Eigen::VectorXd& qr_diag, std::vector<double>& out) {
  const int n = fd.n_obs, L = fd.L;
  out.resize(n);
  const bool par = g_parallel.load();
#pragma omp parallel for schedule(static) if (par)
  for (int i = 0; i < n; ++i) {
    const double* z = fd.row(i);
    double quad = 0.0;
    for (int k = 0; k < L; ++k) quad += z[k] * z[k] * qr_diag[k];
    out[i] = sigma2_gh(fd.country[i], fd.hour[i]) + quad;
  }
}

namespace {

void accumulate_range(const FlatDesign& fd, const std::vector<double>& var, int lo,
                      int hi, Eigen::MatrixXd& XtWX, Eigen::VectorXd& XtWy) {
  const int L = fd.L;
  for (int i = lo; i < hi; ++i) {
    const double* z = fd.row(i);
    const double w = 1.0 / var[i];
    const double wy = w * fd.y[i];
    for (int r = 0; r < L; ++r) {
      const double wzr = w * z[r];
      XtWy[r] += wy * z[r];
      for (int c = 0; c <= r; ++c) XtWX(r, c) += wzr * z[c];
    }
  }
}

void symmetrize(Eigen::MatrixXd& m) {
  m.triangularView<Eigen::StrictlyUpper>() = m.transpose();
}

}  // namespace

NormalEq weighted_normal_eq_serial(const FlatDesign& fd, const std::vector<double>& var) {
  NormalEq eq{Eigen::MatrixXd::Zero(fd.L, fd.L), Eigen::VectorXd::Zero(fd.L)};
  accumulate_range(fd, var, 0, fd.n_obs, eq.XtWX, eq.XtWy);
  symmetrize(eq.XtWX);
  return eq;
}

NormalEq weighted_normal_eq(const FlatDesign& fd, const std::vector<double>& var) {
  if (!g_parallel.load()) return weighted_normal_eq_serial(fd, var);
  const int n = fd.n_obs, L = fd.L;
  const int chunks = std::min(kChunks, std::max(1, n));
  std::vector<Eigen::MatrixXd> px(chunks, Eigen::MatrixXd::Zero(L, L));
  std::vector<Eigen::VectorXd> py(chunks, Eigen::VectorXd::Zero(L));
#pragma omp parallel for schedule(static)
  for (int c = 0; c < chunks; ++c) {
    const int lo = static_cast<int>(static_cast<long long>(n) * c / chunks);
    const int hi = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
    accumulate_range(fd, var, lo, hi, px[c], py[c]);
  }
  NormalEq eq{Eigen::MatrixXd::Zero(L, L), Eigen::VectorXd::Zero(L)};
  for (int c = 0; c < chunks; ++c) {  // fixed combine order
    eq.XtWX += px[c];
    eq.XtWy += py[c];
  }
  symmetrize(eq.XtWX);
  return eq;
}

NormalEq weighted_normal_eq_residual(const FlatDesign& fd, const Eigen::MatrixXd& psi,
                                     const Eigen::MatrixXd& zeta,
                                     const std::vector<double>& weight) {
  const int n = fd.n_obs, L = fd.L;
  const int chunks = g_parallel.load() ? std::min(kChunks, std::max(1, n)) : 1;
  std::vector<Eigen::MatrixXd> px(chunks, Eigen::MatrixXd::Zero(L, L));
  std::vector<Eigen::VectorXd> py(chunks, Eigen::VectorXd::Zero(L));
#pragma omp parallel for schedule(static) if (chunks > 1)
  for (int c = 0; c < chunks; ++c) {
    const int lo = static_cast<int>(static_cast<long long>(n) * c / chunks);
    const int hi = static_cast<int>(static_cast<long long>(n) * (c + 1) / chunks);
    for (int i = lo; i < hi; ++i) {
      const double* z = fd.row(i);
      const int h = fd.hour[i], g = fd.country[i];
      double offset = 0.0;
      for (int k = 0; k < L; ++k) offset += z[k] * (psi(h, k) + zeta(g, k));
      const double w = weight[i];
      const double wr = w * (fd.y[i] - offset);
      for (int r = 0; r < L; ++r) {
        py[c][r] += wr * z[r];
        const double wzr = w * z[r];
        for (int k = 0; k <= r; ++k) px[c](r, k) += wzr * z[k];
      }
    }
  }
  NormalEq eq{Eigen::MatrixXd::Zero(L, L), Eigen::VectorXd::Zero(L)};
  for (int c = 0; c < chunks; ++c) {
    eq.XtWX += px[c];
    eq.XtWy += py[c];
  }
  symmetrize(eq.XtWX);
  return eq;
}

namespace {

// Observations are g-major, then day, then hour, so cell (g, h) owns the
// arithmetic progression base + k * H.
void effect_cell(const FlatDesign& fd, const Eigen::VectorXd& gamma, double w, int g,
                 int h, Eigen::MatrixXd& C, Eigen::VectorXd& d) {
  const int L = fd.L, H = fd.H;
  const int days = fd.n_obs / (fd.G * H);
  const int base = g * days * H + h;
  C.setZero(L, L);
  d.setZero(L);
  for (int k = 0; k < days; ++k) {
    const int i = base + k * H;
    const double* z = fd.row(i);
    double fit = 0.0;
    for (int c = 0; c < L; ++c) fit += z[c] * gamma[c];
    const double wr = w * (fd.y[i] - fit);
    for (int r = 0; r < L; ++r) {
      d[r] += wr * z[r];
      const double wzr = w * z[r];
      for (int c = 0; c <= r; ++c) C(r, c) += wzr * z[c];
    }
  }
  symmetrize(C);
}

}  // namespace

EffectCells effect_cells_serial(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                                const Eigen::VectorXd& lambda, const Eigen::VectorXd& chi,
                                double sigma2) {
  EffectCells out;
  out.H = fd.H;
  out.G = fd.G;
  out.L = fd.L;
  out.C.resize(fd.H * fd.G);
  out.d.resize(fd.H * fd.G);
  for (int h = 0; h < fd.H; ++h) {
    for (int g = 0; g < fd.G; ++g) {
      const double w = lambda[h] * chi[g] / sigma2;
      effect_cell(fd, gamma, w, g, h, out.C[h * fd.G + g], out.d[h * fd.G + g]);
    }
  }
  return out;
}

EffectCells effect_cells(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                         const Eigen::VectorXd& lambda, const Eigen::VectorXd& chi,
                         double sigma2) {
  if (!g_parallel.load()) return effect_cells_serial(fd, gamma, lambda, chi, sigma2);
  EffectCells out;
  out.H = fd.H;
  out.G = fd.G;
  out.L = fd.L;
  const int cells = fd.H * fd.G;
  out.C.resize(cells);
  out.d.resize(cells);
#pragma omp parallel for schedule(static)
  for (int cell = 0; cell < cells; ++cell) {
    const int h = cell / fd.G, g = cell % fd.G;
    const double w = lambda[h] * chi[g] / sigma2;
    effect_cell(fd, gamma, w, g, h, out.C[cell], out.d[cell]);
  }
  return out;
}

Eigen::MatrixXd residual_ss_serial(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                                   const Eigen::MatrixXd& psi, const Eigen::MatrixXd& zeta) {
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(fd.G, fd.H);
  const int L = fd.L;
  for (int i = 0; i < fd.n_obs; ++i) {
    const double* z = fd.row(i);
    const int h = fd.hour[i], g = fd.country[i];
    double fit = 0.0;
    for (int k = 0; k < L; ++k) fit += z[k] * (gamma[k] + psi(h, k) + zeta(g, k));
    const double e = fd.y[i] - fit;
    S(g, h) += e * e;
  }
  return S;
}

Eigen::MatrixXd residual_ss(const FlatDesign& fd, const Eigen::VectorXd& gamma,
                            const Eigen::MatrixXd& psi, const Eigen::MatrixXd& zeta) {
  if (!g_parallel.load()) return residual_ss_serial(fd, gamma, psi, zeta);
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(fd.G, fd.H);
  const int cells = fd.H * fd.G;
  const int L = fd.L, H = fd.H;
  const int days = fd.n_obs / (fd.G * H);
#pragma omp parallel for schedule(static)
  for (int cell = 0; cell < cells; ++cell) {
    const int h = cell / fd.G, g = cell % fd.G;
    const int base = g * days * H + h;
    double acc = 0.0;
    for (int k = 0; k < days; ++k) {
      const int i = base + k * H;
      const double* z = fd.row(i);
      double fit = 0.0;
      for (int c = 0; c < L; ++c) fit += z[c] * (gamma[c] + psi(h, c) + zeta(g, c));
      const double e = fd.y[i] - fit;
      acc += e * e;
    }
    S(g, h) = acc;
  }
  return S;
}

}  // namespace kernels
}  // namespace prumidas
