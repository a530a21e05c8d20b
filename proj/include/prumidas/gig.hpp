#pragma once

#include "prumidas/rng.hpp"

namespace prumidas {

// Generalized inverse Gaussian draw, density proportional to
//   x^{p-1} exp(-(a x + b / x) / 2),  x > 0.
// Valid regions: a>0,b>0 any p; b=0 with p>0 (Gamma limit); a=0 with p<0
// (inverse-gamma limit). Throws std::invalid_argument otherwise.
double gig_draw(Rng& rng, double p, double a, double b);

}  // namespace prumidas
