#include "prumidas/gig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace prumidas {

namespace {

// Two-parameter form: density ~ x^{p-1} exp(-omega (x + 1/x) / 2) with p >= 0.
// Exponential rejection on the log scale after relocating the mode to zero
// (Devroye's uniformly fast generator). The log-transformed target is
// exp(psi(u)) with psi concave, psi(0) = psi'(0) = 0.
double gig_two_param(Rng& rng, double p, double omega) {
  const double alpha = std::sqrt(omega * omega + p * p) - p;
  const auto psi = [&](double x) {
    return -alpha * (std::cosh(x) - 1.0) - p * (std::exp(x) - x - 1.0);
  };
  const auto psi_prime = [&](double x) {
    return -alpha * std::sinh(x) - p * (std::exp(x) - 1.0);
  };

  double t;
  {
    const double v = -psi(1.0);
    if (v >= 0.5 && v <= 2.0) {
      t = 1.0;
    } else if (v > 2.0) {
      t = std::sqrt(2.0 / (alpha + p));
    } else {
      t = std::log(4.0 / (alpha + 2.0 * p));
    }
  }
  double s;
  {
    const double v = -psi(-1.0);
    if (v >= 0.5 && v <= 2.0) {
      s = 1.0;
    } else if (v > 2.0) {
      s = std::sqrt(4.0 / (alpha * std::cosh(1.0) + p));
    } else {
      const double a_inv = 1.0 / alpha;
      const double cand = std::log(1.0 + a_inv + std::sqrt(a_inv * a_inv + 2.0 * a_inv));
      s = (p > 0.0) ? std::min(1.0 / p, cand) : cand;
    }
  }

  const double eta = -psi(t);
  const double zeta = -psi_prime(t);
  const double theta = -psi(-s);
  const double xi = psi_prime(-s);
  const double pr = 1.0 / xi;
  const double rr = 1.0 / zeta;
  const double td = t - rr * eta;
  const double sd = s - pr * theta;
  const double q = td + sd;

  double x;
  for (;;) {
    const double u = rng.uniform();
    const double v = rng.uniform();
    const double w = rng.uniform();
    if (u < q / (pr + q + rr)) {
      x = -sd + q * v;
    } else if (u < (q + rr) / (pr + q + rr)) {
      x = td - rr * std::log(v);
    } else {
      x = -sd + pr * std::log(v);
    }
    double envelope;
    if (x > td) {
      envelope = std::exp(-eta - zeta * (x - t));
    } else if (x < -sd) {
      envelope = std::exp(-theta + xi * (x + s));
    } else {
      envelope = 1.0;
    }
    if (w * envelope <= std::exp(psi(x))) break;
  }
  // Undo the mode relocation: the target in the original scale is
  // exp(t0 + x) with sinh(t0) = p / omega.
  const double ratio = p / omega;
  return (ratio + std::sqrt(1.0 + ratio * ratio)) * std::exp(x);
}

}  // namespace

double gig_draw(Rng& rng, double p, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) {
    throw std::invalid_argument("gig_draw: a and b must be nonnegative");
  }
  if (b == 0.0) {
    if (!(p > 0.0) || !(a > 0.0)) {
      throw std::invalid_argument("gig_draw: b=0 requires p>0 and a>0");
    }
    return rng.gamma(p, a / 2.0);
  }
  if (a == 0.0) {
    if (!(p < 0.0)) throw std::invalid_argument("gig_draw: a=0 requires p<0");
    return rng.inv_gamma(-p, b / 2.0);
  }
  if (p < 0.0) return 1.0 / gig_draw(rng, -p, b, a);
  const double omega = std::sqrt(a * b);
  return std::sqrt(b / a) * gig_two_param(rng, p, omega);
}

}  // namespace prumidas
