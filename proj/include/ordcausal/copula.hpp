#pragma once

#include <string>

namespace ordcausal {

enum class CopulaFamily {
  Independence,
  Gaussian,      // rho in (-1,1)
  Gumbel,        // rho in [1,inf); rho = 1 is exact independence
  Clayton,       // rho in (0,inf)
  Frank,         // rho in R \ {0}
  FrechetLower,  // W(u,v) = max(u+v-1, 0); countermonotone bound
  FrechetUpper,  // M(u,v) = min(u,v); comonotone bound
};

struct CopulaSpec {
  CopulaFamily family = CopulaFamily::Independence;
  double rho = 0.0;  // ignored for Independence / Frechet families
};

// Interior clamp applied to non-boundary inputs before evaluation.
inline constexpr double kCopulaClampEps = 1e-10;

// C(u,v). Inputs exactly 0 or 1 short-circuit to the exact boundary value
// (C(u,0)=0, C(u,1)=u, ...); interior inputs are clamped to
// [kCopulaClampEps, 1-kCopulaClampEps]. Output is forced into the
// Frechet-Hoeffding sandwich [max(u+v-1,0), min(u,v)].
double cdf(const CopulaSpec& spec, double u, double v);

// dC/du, the conditional distribution of V given U=u. Exact at the
// boundaries of the other coordinate: partial_u(u,0)=0, partial_u(u,1)=1.
// For the Frechet bounds the subgradient convention splits ties evenly:
// partial_u(M) = 1{u<v} + 0.5*1{u=v}, partial_u(W) = 1{u+v>1} + 0.5*1{u+v=1}.
double partial_u(const CopulaSpec& spec, double u, double v);
// dC/dv, symmetric to partial_u.
double partial_v(const CopulaSpec& spec, double u, double v);

// C-volume of the rectangle (u_lo,u_hi] x (v_lo,v_hi], floored at 0.
double rectangle(const CopulaSpec& spec, double u_lo, double u_hi, double v_lo, double v_hi);

// Kendall tau <-> dependence parameter maps.
//   Gaussian: rho = sin(pi*tau/2)         tau in (-1,1)
//   Gumbel:   rho = 1/(1-tau)             tau in [0,1); tau=0 -> rho=1
//   Clayton:  rho = 2*tau/(1-tau)         tau in (0,1)
//   Frank:    numeric inversion of the Debye-function relation, bracketed
//             bisection on rho in [-500,500]; tau=0 is not representable.
// Out-of-range tau (including negative tau for Gumbel/Clayton) raises
// UnsupportedTau.
double tau_to_rho(CopulaFamily family, double tau);
double rho_to_tau(CopulaFamily family, double rho);

CopulaSpec spec_from_tau(CopulaFamily family, double tau);

// False for the Frechet bound copulas, whose derivative coefficients are
// undefined for estimation.
bool is_differentiable(CopulaFamily family);

const char* family_name(CopulaFamily family);
CopulaFamily family_from_name(const std::string& name);

}  // namespace ordcausal
