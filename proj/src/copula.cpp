#include "ordcausal/copula.hpp"

#include <algorithm>
#include <cmath>

#include "ordcausal/errors.hpp"
#include "ordcausal/stats.hpp"

namespace ordcausal {

namespace {

void validate(const CopulaSpec& s) {
  const double r = s.rho;
  switch (s.family) {
    case CopulaFamily::Independence:
    case CopulaFamily::FrechetLower:
    case CopulaFamily::FrechetUpper:
      return;  // parameter ignored
    case CopulaFamily::Gaussian:
      if (!(r > -1.0 && r < 1.0))
        throw InvalidParameter("gaussian copula: rho must lie in (-1,1)");
      return;
    case CopulaFamily::Gumbel:
      if (!(r >= 1.0) || !std::isfinite(r))
        throw InvalidParameter("gumbel copula: rho must lie in [1,inf)");
      return;
    case CopulaFamily::Clayton:
      if (!(r > 0.0) || !std::isfinite(r))
        throw InvalidParameter("clayton copula: rho must lie in (0,inf)");
      return;
    case CopulaFamily::Frank:
      if (r == 0.0 || !std::isfinite(r))
        throw InvalidParameter("frank copula: rho must be a nonzero finite value");
      return;
  }
  throw InvalidParameter("unknown copula family");
}

double clamp_interior(double w) {
  return std::min(std::max(w, kCopulaClampEps), 1.0 - kCopulaClampEps);
}

double logaddexp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

// log(e^z - 1) for z > 0 without overflow.
double log_expm1(double z) {
  if (z < 1.0) return std::log(std::expm1(z));
  return z + std::log1p(-std::exp(-z));
}

// ---------------------------------------------------------------------------
// Gaussian: bivariate normal CDF, Drezner-Wesolowsky / Genz single-integral
// reduction with fixed-order Gauss-Legendre nodes. Absolute accuracy ~1e-14.
// ---------------------------------------------------------------------------

constexpr double kTwoPi = 6.283185307179586476925286766559;

const double kGL6x[3] = {0.9324695142031521, 0.6612093864662645, 0.2386191860831969};
const double kGL6w[3] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910};
const double kGL12x[6] = {0.9815606342467192, 0.9041172563704749, 0.7699026741943047,
                          0.5873179542866175, 0.3678314989981802, 0.1252334085114689};
const double kGL12w[6] = {0.0471753363865118, 0.1069393259953184, 0.1600783285433462,
                          0.2031674267230659, 0.2334925365383548, 0.2491470458134028};
const double kGL20x[10] = {0.9931285991850949, 0.9639719272779138, 0.9122344282513259,
                           0.8391169718222188, 0.7463319064601508, 0.6360536807265150,
                           0.5108670019508271, 0.3737060887154195, 0.2277858511416451,
                           0.0765265211334973};
const double kGL20w[10] = {0.0176140071391521, 0.0406014298003869, 0.0626720483341091,
                           0.0832767415767047, 0.1019301198172404, 0.1181945319615184,
                           0.1316886384491766, 0.1420961093183820, 0.1491729864726037,
                           0.1527533871307258};

// P(X > dh, Y > dk) for standard bivariate normal with correlation r.
double bvnd(double dh, double dk, double r) {
  const double* gx;
  const double* gw;
  int lg;
  const double ar = std::fabs(r);
  if (ar < 0.3) {
    lg = 3;
    gx = kGL6x;
    gw = kGL6w;
  } else if (ar < 0.75) {
    lg = 6;
    gx = kGL12x;
    gw = kGL12w;
  } else {
    lg = 10;
    gx = kGL20x;
    gw = kGL20w;
  }

  double h = dh, k = dk, hk = h * k, bvn = 0.0;
  if (ar < 0.925) {
    if (ar > 0.0) {
      const double hs = (h * h + k * k) / 2.0;
      const double asr = std::asin(r);
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          const double sn = std::sin(asr * (is * gx[i] + 1.0) / 2.0);
          bvn += gw[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
      }
      bvn = bvn * asr / (2.0 * kTwoPi);
    }
    bvn += norm_cdf(-h) * norm_cdf(-k);
  } else {
    if (r < 0.0) {
      k = -k;
      hk = -hk;
    }
    if (ar < 1.0) {
      const double as = (1.0 - r) * (1.0 + r);
      double a = std::sqrt(as);
      const double bs = (h - k) * (h - k);
      const double c = (4.0 - hk) / 8.0;
      const double d = (12.0 - hk) / 16.0;
      double asr = -(bs / as + hk) / 2.0;
      if (asr > -100.0)
        bvn = a * std::exp(asr) *
              (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
      if (-hk < 100.0) {
        const double b = std::sqrt(bs);
        bvn -= std::exp(-hk / 2.0) * std::sqrt(kTwoPi) * norm_cdf(-b / a) * b *
               (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
      }
      a /= 2.0;
      for (int i = 0; i < lg; ++i) {
        for (int is = -1; is <= 1; is += 2) {
          double xs = a * (is * gx[i] + 1.0);
          xs = xs * xs;
          const double rs = std::sqrt(1.0 - xs);
          asr = -(bs / xs + hk) / 2.0;
          if (asr > -100.0)
            bvn += a * gw[i] * std::exp(asr) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs -
                    (1.0 + c * xs * (1.0 + d * xs)));
        }
      }
      bvn = -bvn / kTwoPi;
    }
    if (r > 0.0) {
      bvn += norm_cdf(-std::max(h, k));
    } else {
      bvn = -bvn;
      if (k > h) bvn += norm_cdf(k) - norm_cdf(h);
    }
  }
  return bvn;
}

double gaussian_cdf(double u, double v, double rho) {
  if (rho == 0.0) return u * v;
  const double qa = norm_quantile(u);
  const double qb = norm_quantile(v);
  return bvnd(-qa, -qb, rho);
}

double gaussian_partial_u(double u, double v, double rho) {
  const double s = std::sqrt((1.0 - rho) * (1.0 + rho));
  return norm_cdf((norm_quantile(v) - rho * norm_quantile(u)) / s);
}

// ---------------------------------------------------------------------------
// Gumbel: C(u,v) = exp(-[(-ln u)^rho + (-ln v)^rho]^{1/rho}); log-domain.
// ---------------------------------------------------------------------------

double gumbel_cdf(double u, double v, double rho) {
  if (rho == 1.0) return u * v;
  const double x = -std::log(u), y = -std::log(v);
  const double ln_t = logaddexp(rho * std::log(x), rho * std::log(y));
  return std::exp(-std::exp(ln_t / rho));
}

double gumbel_partial_u(double u, double v, double rho) {
  if (rho == 1.0) return v;
  const double x = -std::log(u), y = -std::log(v);
  const double lx = std::log(x);
  const double ln_s = logaddexp(rho * lx, rho * std::log(y)) / rho;
  // C * S^{1-rho} * x^{rho-1} / u
  return std::exp(-std::exp(ln_s) + (1.0 - rho) * ln_s + (rho - 1.0) * lx + x);
}

// ---------------------------------------------------------------------------
// Clayton: C(u,v) = (u^-rho + v^-rho - 1)^{-1/rho}; log-domain.
// ---------------------------------------------------------------------------

double clayton_log_t(double x, double y, double rho) {
  const double au = rho * x, av = rho * y;  // x = -ln u, y = -ln v
  const double m = std::max(au, av);
  return m + std::log(std::exp(au - m) + std::exp(av - m) - std::exp(-m));
}

double clayton_cdf(double u, double v, double rho) {
  const double ln_t = clayton_log_t(-std::log(u), -std::log(v), rho);
  return std::exp(-ln_t / rho);
}

double clayton_partial_u(double u, double v, double rho) {
  const double x = -std::log(u);
  const double ln_t = clayton_log_t(x, -std::log(v), rho);
  // u^{-rho-1} * T^{-1/rho - 1}
  return std::exp((rho + 1.0) * x - (1.0 / rho + 1.0) * ln_t);
}

// ---------------------------------------------------------------------------
// Frank: C(u,v) = -(1/rho) ln[1 + (e^{-rho u}-1)(e^{-rho v}-1)/(e^{-rho}-1)].
// Evaluated through cancellation-free forms on both halves of the parameter
// range; overflow-safe for any finite rho.
// ---------------------------------------------------------------------------

// For rho > 0: numerator of 1 - A as a sum of two positive terms,
// N = e^{-r u}(1 - e^{-r v}) + e^{-r v}(1 - e^{-r (1-v)}).
double frank_pos_n(double u, double v, double rho) {
  return std::exp(-rho * u) * (-std::expm1(-rho * v)) +
         std::exp(-rho * v) * (-std::expm1(-rho * (1.0 - v)));
}

double frank_cdf(double u, double v, double rho) {
  if (rho > 0.0) {
    if (rho < 20.0) {
      // A = (1-e^{-ru})(1-e^{-rv})/(1-e^{-r}) stays well inside (0,1) here.
      const double a =
          -std::expm1(-rho * u) * std::expm1(-rho * v) / std::expm1(-rho);
      return -std::log1p(-a) / rho;
    }
    const double n = frank_pos_n(u, v, rho);
    const double d = -std::expm1(-rho);
    return -std::log(n / d) / rho;
  }
  const double t = -rho;
  double log1pb;
  if (t * (u + v) <= 690.0) {
    const double b = std::expm1(t * u) * std::expm1(t * v) / std::expm1(t);
    log1pb = std::log1p(b);
  } else {
    const double lb = log_expm1(t * u) + log_expm1(t * v) - log_expm1(t);
    log1pb = (lb > 690.0) ? lb + std::log1p(std::exp(-lb))
                          : std::log1p(std::exp(lb));
  }
  return log1pb / t;
}

double frank_partial_u(double u, double v, double rho) {
  if (rho > 0.0) {
    const double num = std::exp(-rho * u) * (-std::expm1(-rho * v));
    return num / frank_pos_n(u, v, rho);
  }
  const double t = -rho;
  if (t <= 300.0) {
    const double num = std::exp(t * u) * std::expm1(t * v);
    const double den = std::expm1(t) + std::expm1(t * u) * std::expm1(t * v);
    return num / den;
  }
  const double ln_num = t * u + log_expm1(t * v);
  const double ln_den = logaddexp(log_expm1(t), log_expm1(t * u) + log_expm1(t * v));
  return std::exp(ln_num - ln_den);
}

// ---------------------------------------------------------------------------
// Debye function of order one, D1(x) = (1/x) int_0^x t/(e^t - 1) dt, x > 0.
// Composite Gauss-Legendre; the tail beyond 60 is below 1e-24.
// ---------------------------------------------------------------------------

double debye1(double x) {
  const double upper = std::min(x, 60.0);
  constexpr int kPanels = 48;
  const double h = upper / kPanels;
  double total = 0.0;
  for (int p = 0; p < kPanels; ++p) {
    const double a = p * h;
    for (int i = 0; i < 10; ++i) {
      for (int is = -1; is <= 1; is += 2) {
        const double t = a + h * (is * kGL20x[i] + 1.0) / 2.0;
        const double f = (t < 1e-8) ? 1.0 - t / 2.0 : t / std::expm1(t);
        total += kGL20w[i] * f * h / 2.0;
      }
    }
  }
  return total / x;
}

double frank_tau(double rho) {
  const double ax = std::fabs(rho);
  double d = debye1(ax);
  if (rho < 0.0) d += ax / 2.0;
  return 1.0 + 4.0 * (d - 1.0) / rho;
}

constexpr double kFrankRhoBracket = 500.0;

double frank_tau_to_rho(double tau) {
  if (tau == 0.0)
    throw UnsupportedTau(
        "frank copula: tau = 0 has no valid parameter; use the independence family");
  const double tau_max = frank_tau(kFrankRhoBracket);
  if (!(std::fabs(tau) < tau_max))
    throw UnsupportedTau("frank copula: |tau| outside the invertible range");
  double lo = -kFrankRhoBracket, hi = kFrankRhoBracket;
  // frank_tau is increasing and odd; plain bisection to 1e-10.
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    if (mid == 0.0 ? (tau > 0.0) : (frank_tau(mid) < tau))
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double cdf(const CopulaSpec& spec, double u, double v) {
  validate(spec);
  if (std::isnan(u) || std::isnan(v)) throw InvalidParameter("copula cdf: NaN input");
  if (u <= 0.0 || v <= 0.0) return 0.0;
  if (u >= 1.0 && v >= 1.0) return 1.0;
  if (u >= 1.0) return v;
  if (v >= 1.0) return u;
  const double uc = clamp_interior(u), vc = clamp_interior(v);
  double c;
  switch (spec.family) {
    case CopulaFamily::Independence:
      c = uc * vc;
      break;
    case CopulaFamily::Gaussian:
      c = gaussian_cdf(uc, vc, spec.rho);
      break;
    case CopulaFamily::Gumbel:
      c = gumbel_cdf(uc, vc, spec.rho);
      break;
    case CopulaFamily::Clayton:
      c = clayton_cdf(uc, vc, spec.rho);
      break;
    case CopulaFamily::Frank:
      c = frank_cdf(uc, vc, spec.rho);
      break;
    case CopulaFamily::FrechetLower:
      c = std::max(uc + vc - 1.0, 0.0);
      break;
    case CopulaFamily::FrechetUpper:
      c = std::min(uc, vc);
      break;
    default:
      throw InvalidParameter("unknown copula family");
  }
  // Force the Frechet-Hoeffding sandwich; only round-off can violate it.
  return std::min(std::max(c, std::max(uc + vc - 1.0, 0.0)), std::min(uc, vc));
}

double partial_u(const CopulaSpec& spec, double u, double v) {
  validate(spec);
  if (std::isnan(u) || std::isnan(v)) throw InvalidParameter("copula partial: NaN input");
  if (v <= 0.0) return 0.0;
  if (v >= 1.0) return 1.0;
  const double uc = clamp_interior(u), vc = clamp_interior(v);
  double d;
  switch (spec.family) {
    case CopulaFamily::Independence:
      d = vc;
      break;
    case CopulaFamily::Gaussian:
      d = gaussian_partial_u(uc, vc, spec.rho);
      break;
    case CopulaFamily::Gumbel:
      d = gumbel_partial_u(uc, vc, spec.rho);
      break;
    case CopulaFamily::Clayton:
      d = clayton_partial_u(uc, vc, spec.rho);
      break;
    case CopulaFamily::Frank:
      d = frank_partial_u(uc, vc, spec.rho);
      break;
    case CopulaFamily::FrechetLower:
      d = (uc + vc > 1.0) ? 1.0 : (uc + vc == 1.0 ? 0.5 : 0.0);
      break;
    case CopulaFamily::FrechetUpper:
      d = (uc < vc) ? 1.0 : (uc == vc ? 0.5 : 0.0);
      break;
    default:
      throw InvalidParameter("unknown copula family");
  }
  return std::min(std::max(d, 0.0), 1.0);
}

double partial_v(const CopulaSpec& spec, double u, double v) {
  validate(spec);
  if (std::isnan(u) || std::isnan(v)) throw InvalidParameter("copula partial: NaN input");
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double uc = clamp_interior(u), vc = clamp_interior(v);
  double d;
  switch (spec.family) {
    case CopulaFamily::Independence:
      d = uc;
      break;
    case CopulaFamily::Gaussian:
      d = gaussian_partial_u(vc, uc, spec.rho);
      break;
    case CopulaFamily::Gumbel:
      d = gumbel_partial_u(vc, uc, spec.rho);
      break;
    case CopulaFamily::Clayton:
      d = clayton_partial_u(vc, uc, spec.rho);
      break;
    case CopulaFamily::Frank:
      d = frank_partial_u(vc, uc, spec.rho);
      break;
    case CopulaFamily::FrechetLower:
      d = (uc + vc > 1.0) ? 1.0 : (uc + vc == 1.0 ? 0.5 : 0.0);
      break;
    case CopulaFamily::FrechetUpper:
      d = (vc < uc) ? 1.0 : (uc == vc ? 0.5 : 0.0);
      break;
    default:
      throw InvalidParameter("unknown copula family");
  }
  return std::min(std::max(d, 0.0), 1.0);
}

double rectangle(const CopulaSpec& spec, double u_lo, double u_hi, double v_lo, double v_hi) {
  if (!(u_lo <= u_hi) || !(v_lo <= v_hi))
    throw InvalidParameter("rectangle: require u_lo <= u_hi and v_lo <= v_hi");
  const double vol = cdf(spec, u_hi, v_hi) - cdf(spec, u_lo, v_hi) -
                     cdf(spec, u_hi, v_lo) + cdf(spec, u_lo, v_lo);
  return std::max(vol, 0.0);
}

double tau_to_rho(CopulaFamily family, double tau) {
  if (std::isnan(tau)) throw UnsupportedTau("tau_to_rho: NaN tau");
  switch (family) {
    case CopulaFamily::Independence:
      if (tau != 0.0)
        throw UnsupportedTau("independence copula only represents tau = 0");
      return 0.0;
    case CopulaFamily::Gaussian:
      if (!(tau > -1.0 && tau < 1.0))
        throw UnsupportedTau("gaussian copula: tau must lie in (-1,1)");
      return std::sin(1.5707963267948966 * tau);
    case CopulaFamily::Gumbel:
      if (!(tau >= 0.0 && tau < 1.0))
        throw UnsupportedTau("gumbel copula: tau must lie in [0,1)");
      return 1.0 / (1.0 - tau);
    case CopulaFamily::Clayton:
      if (!(tau > 0.0 && tau < 1.0))
        throw UnsupportedTau("clayton copula: tau must lie in (0,1)");
      return 2.0 * tau / (1.0 - tau);
    case CopulaFamily::Frank:
      if (!(tau > -1.0 && tau < 1.0))
        throw UnsupportedTau("frank copula: tau must lie in (-1,1)");
      return frank_tau_to_rho(tau);
    case CopulaFamily::FrechetLower:
      if (tau != -1.0)
        throw UnsupportedTau("lower Frechet bound only represents tau = -1");
      return 0.0;
    case CopulaFamily::FrechetUpper:
      if (tau != 1.0)
        throw UnsupportedTau("upper Frechet bound only represents tau = 1");
      return 0.0;
  }
  throw UnsupportedTau("unknown copula family");
}

double rho_to_tau(CopulaFamily family, double rho) {
  validate(CopulaSpec{family, rho});
  switch (family) {
    case CopulaFamily::Independence:
      return 0.0;
    case CopulaFamily::Gaussian:
      return 2.0 * std::asin(rho) / 3.141592653589793;
    case CopulaFamily::Gumbel:
      return 1.0 - 1.0 / rho;
    case CopulaFamily::Clayton:
      return rho / (rho + 2.0);
    case CopulaFamily::Frank:
      return frank_tau(rho);
    case CopulaFamily::FrechetLower:
      return -1.0;
    case CopulaFamily::FrechetUpper:
      return 1.0;
  }
  throw InvalidParameter("unknown copula family");
}

CopulaSpec spec_from_tau(CopulaFamily family, double tau) {
  return CopulaSpec{family, tau_to_rho(family, tau)};
}

bool is_differentiable(CopulaFamily family) {
  return family != CopulaFamily::FrechetLower && family != CopulaFamily::FrechetUpper;
}

const char* family_name(CopulaFamily family) {
  switch (family) {
    case CopulaFamily::Independence: return "independence";
    case CopulaFamily::Gaussian: return "gaussian";
    case CopulaFamily::Gumbel: return "gumbel";
    case CopulaFamily::Clayton: return "clayton";
    case CopulaFamily::Frank: return "frank";
    case CopulaFamily::FrechetLower: return "frechet_lower";
    case CopulaFamily::FrechetUpper: return "frechet_upper";
  }
  return "unknown";
}

CopulaFamily family_from_name(const std::string& name) {
  if (name == "independence") return CopulaFamily::Independence;
  if (name == "gaussian") return CopulaFamily::Gaussian;
  if (name == "gumbel") return CopulaFamily::Gumbel;
  if (name == "clayton") return CopulaFamily::Clayton;
  if (name == "frank") return CopulaFamily::Frank;
  if (name == "frechet_lower") return CopulaFamily::FrechetLower;
  if (name == "frechet_upper") return CopulaFamily::FrechetUpper;
  throw ConfigError("unknown copula family name: " + name);
}

}  // namespace ordcausal
