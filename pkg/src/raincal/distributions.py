"""Parametric families for 6-h rainfall accumulations.

Three families share the same structure: an atom ``pi`` at zero (dry cases)
and a continuous density on the positive half-line.

* EGP: extended generalized Pareto.  The positive part applies the power
  transform ``T(u) = u**kappa`` to a GP variable,

      F(y) = pi + (1 - pi) * H_xi(y / sigma)**kappa,
      H_xi(z) = 1 - (1 + xi * z)**(-1/xi),

  so the lower tail behaves like a gamma-type law while the upper tail keeps
  the GP index ``xi``.

* CSG: censored shifted gamma.  A gamma variable with shape ``kappa`` and
  scale ``theta`` is shifted left by ``delta`` and censored at zero,

      F(y) = GammaCDF(y + delta; kappa, theta)   for y >= 0,

  hence the dry mass is ``pi = GammaCDF(delta; kappa, theta)``.

* CGEV: censored GEV.  A GEV variable is censored at zero, so
  ``F(0) = pi = GEV(0; mu, sigma, xi)`` and ``F(y) = GEV(y; mu, sigma, xi)``
  for positive ``y``.

The module also provides the closed-form CRPS for the EGP family, a
reference CRPS by adaptive quadrature usable with any CDF, probability
weighted moments of a weighted sample, and the moment-based EGP fit used by
the forest tail extension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special, stats

__all__ = [
    "EgpParams",
    "CsgParams",
    "CgevParams",
    "PwmTriple",
    "PwmInfeasibleError",
    "egp_cdf",
    "egp_pdf",
    "egp_quantile",
    "egp_random",
    "egp_mean",
    "egp_crps",
    "egp_crps_batch",
    "csg_cdf",
    "csg_quantile",
    "csg_random",
    "cgev_cdf",
    "cgev_quantile",
    "cgev_random",
    "crps_numeric",
    "incomplete_beta",
    "pwm_weighted",
    "egp_fit_pwm",
]

_XI_ZERO = 1e-10


class PwmInfeasibleError(ValueError):
    """No parameters in the search box reproduce the requested moments."""


@dataclass(frozen=True)
class EgpParams:
    """Extended-GP parameters: atom ``pi``, shape ``kappa``, scale ``sigma``, tail ``xi``."""

    pi: float
    kappa: float
    sigma: float
    xi: float

    def __post_init__(self):
        for name in ("pi", "kappa", "sigma", "xi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not 0.0 <= self.pi <= 1.0:
            raise ValueError(f"pi must lie in [0, 1], got {self.pi}")
        if self.kappa <= 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not 0.0 <= self.xi < 1.0:
            raise ValueError(f"xi must lie in [0, 1), got {self.xi}")


@dataclass(frozen=True)
class CsgParams:
    """Censored shifted gamma: shift ``delta``, gamma shape/scale, derived atom ``pi``.

    ``pi`` is determined by the censoring construction; it may be passed for
    round-tripping serialized parameters and is then validated against the
    gamma mass below ``delta``.
    """

    delta: float
    kappa: float
    theta: float
    pi: float | None = None

    def __post_init__(self):
        for name in ("delta", "kappa", "theta"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")
        if self.kappa <= 0.0 or self.theta <= 0.0:
            raise ValueError("kappa and theta must be positive")
        implied = float(stats.gamma.cdf(self.delta, a=self.kappa, scale=self.theta))
        if self.pi is None:
            object.__setattr__(self, "pi", implied)
        elif abs(self.pi - implied) > 1e-8:
            raise ValueError(
                f"pi={self.pi} inconsistent with censoring mass {implied} below delta"
            )


@dataclass(frozen=True)
class CgevParams:
    """Censored GEV: location ``mu``, scale ``sigma``, shape ``xi``, derived atom ``pi``."""

    mu: float
    sigma: float
    xi: float
    pi: float | None = None

    def __post_init__(self):
        for name in ("mu", "sigma", "xi"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.sigma <= 0.0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.xi >= 1.0:
            raise ValueError("xi >= 1 has infinite mean and is not supported")
        implied = float(_gev_cdf(np.asarray(0.0), self.mu, self.sigma, self.xi))
        if self.pi is None:
            object.__setattr__(self, "pi", implied)
        elif abs(self.pi - implied) > 1e-8:
            raise ValueError(f"pi={self.pi} inconsistent with GEV mass {implied} below 0")


def _h_pow_kappa(z, kappa, xi):
    """H_xi(z)**kappa for z >= 0, with a stable xi -> 0 branch."""
    z = np.asarray(z, dtype=float)
    if abs(xi) < _XI_ZERO:
        h = -np.expm1(-z)
    else:
        h = -np.expm1(-np.log1p(xi * z) / xi)
    return h**kappa


def egp_cdf(p: EgpParams, y):
    """CDF of the EGP family.

    Parameters
    ----------
    p : EgpParams
    y : float or array_like
        Accumulations in mm; negative arguments return 0.

    Returns
    -------
    float or ndarray
    """
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    out = np.full(y.shape, float(p.pi))
    wet = y > 0.0
    out[wet] = p.pi + (1.0 - p.pi) * _h_pow_kappa(y[wet] / p.sigma, p.kappa, p.xi)
    out[y < 0.0] = 0.0
    return float(out[0]) if scalar else out


def egp_pdf(p: EgpParams, y):
    """Density of the positive part (the atom at zero is not represented)."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    y = np.atleast_1d(y)
    out = np.zeros(y.shape)
    wet = y > 0.0
    z = y[wet] / p.sigma
    if abs(p.xi) < _XI_ZERO:
        h = -np.expm1(-z)
        dens = np.exp(-z)
    else:
        h = -np.expm1(-np.log1p(p.xi * z) / p.xi)
        dens = (1.0 + p.xi * z) ** (-1.0 / p.xi - 1.0)
    out[wet] = (1.0 - p.pi) * (p.kappa / p.sigma) * h ** (p.kappa - 1.0) * dens
    return float(out[0]) if scalar else out


def egp_quantile(p: EgpParams, prob):
    """Generalized inverse of the EGP CDF.

    ``prob`` must lie in [0, 1); the quantile is unbounded as prob -> 1.
    Probabilities at or below the atom ``pi`` map to 0.
    """
    prob = np.asarray(prob, dtype=float)
    scalar = prob.ndim == 0
    prob = np.atleast_1d(prob)
    if np.any((prob < 0.0) | (prob >= 1.0)):
        raise ValueError("prob must lie in [0, 1)")
    out = np.zeros(prob.shape)
    wet = prob > p.pi
    if p.pi < 1.0:
        u = ((prob[wet] - p.pi) / (1.0 - p.pi)) ** (1.0 / p.kappa)
        if abs(p.xi) < _XI_ZERO:
            out[wet] = -p.sigma * np.log1p(-u)
        else:
            out[wet] = p.sigma * np.expm1(-p.xi * np.log1p(-u)) / p.xi
    return float(out[0]) if scalar else out


def egp_random(p: EgpParams, size, rng) -> np.ndarray:
    """Draw from the EGP family by inversion (atom included)."""
    return egp_quantile(p, rng.random(size))


def egp_mean(p: EgpParams) -> float:
    """Expectation, atom included."""
    if abs(p.xi) < _XI_ZERO:
        pos = p.sigma * (special.digamma(p.kappa + 1.0) - special.digamma(1.0))
    else:
        g1 = math.exp(math.log(p.kappa) + special.betaln(p.kappa, 1.0 - p.xi))
        pos = p.sigma * (g1 - 1.0) / p.xi
    return (1.0 - p.pi) * pos


def egp_crps(p: EgpParams, y: float) -> float:
    """Closed-form CRPS of an EGP forecast against observation ``y``.

    Valid for 0 < xi < 1; outside that range the value is computed by
    ``crps_numeric`` instead.  With ``B(z; a, b)`` the non-regularized
    incomplete beta function and ``z = (1 + xi*y/sigma)**(-1/xi)``:

        CRPS = y*(2F(y) - 1)
             + (sigma/xi) * (2F(y) - pi**2 - 1)
             + (2*kappa*sigma*(1-pi)/xi)
               * (B(z; 1-xi, kappa) - (1-pi)*B(1-xi, 2*kappa) - pi*B(1-xi, kappa))

    For kappa=1, pi=0, y=0 this reduces to the GP value sigma/(2 - xi).
    """
    if y < 0.0:
        raise ValueError("observations are nonnegative accumulations")
    if not 0.0 < p.xi < 1.0:
        return crps_numeric(lambda t: egp_cdf(p, t), y)
    return float(egp_crps_batch(p.pi, p.kappa, p.sigma, p.xi, y))


def egp_crps_batch(pi, kappa, sigma, xi, y):
    """Vectorized closed-form EGP CRPS; all arguments broadcast.

    Requires 0 < xi < 1 elementwise (not checked here; the scalar wrapper
    and the EMOS links guarantee it).
    """
    pi = np.asarray(pi, dtype=float)
    kappa = np.asarray(kappa, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    z = (1.0 + xi * y / sigma) ** (-1.0 / xi)
    gy = np.where(y > 0.0, _h_pow_kappa_b(y / sigma, kappa, xi), 0.0)
    f = pi + (1.0 - pi) * gy
    a = 1.0 - xi
    beta_k = np.exp(special.betaln(a, kappa))
    beta_2k = np.exp(special.betaln(a, 2.0 * kappa))
    term3 = special.betainc(a, kappa, z) * beta_k - (1.0 - pi) * beta_2k - pi * beta_k
    return (
        y * (2.0 * f - 1.0)
        + (sigma / xi) * (2.0 * f - pi**2 - 1.0)
        + (2.0 * kappa * sigma * (1.0 - pi) / xi) * term3
    )


def _h_pow_kappa_b(z, kappa, xi):
    """Broadcasting variant of ``_h_pow_kappa`` with per-element xi."""
    h = -np.expm1(-np.log1p(xi * z) / np.where(xi == 0.0, 1.0, xi))
    h = np.where(xi == 0.0, -np.expm1(-z), h)
    return h**kappa


def csg_cdf(p: CsgParams, y):
    """CDF of the censored shifted gamma family."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    out = np.where(
        y < 0.0, 0.0, stats.gamma.cdf(np.maximum(y, 0.0) + p.delta, a=p.kappa, scale=p.theta)
    )
    return float(out) if scalar else out


def csg_quantile(p: CsgParams, prob):
    """Generalized inverse CDF; probabilities within the atom map to 0."""
    prob = np.asarray(prob, dtype=float)
    scalar = prob.ndim == 0
    if np.any((prob < 0.0) | (prob >= 1.0)):
        raise ValueError("prob must lie in [0, 1)")
    out = np.maximum(stats.gamma.ppf(prob, a=p.kappa, scale=p.theta) - p.delta, 0.0)
    return float(out) if scalar else out


def csg_random(p: CsgParams, size, rng) -> np.ndarray:
    return np.maximum(rng.gamma(shape=p.kappa, scale=p.theta, size=size) - p.delta, 0.0)


def _gev_cdf(y, mu, sigma, xi):
    y = np.asarray(y, dtype=float)
    t = (y - mu) / sigma
    if abs(xi) < _XI_ZERO:
        return np.exp(-np.exp(-t))
    arg = 1.0 + xi * t
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        core = np.exp(-np.power(np.maximum(arg, 0.0), -1.0 / xi))
    if xi > 0.0:
        # below the lower endpoint the CDF is 0
        return np.where(arg <= 0.0, 0.0, core)
    # xi < 0: above the upper endpoint the CDF is 1
    return np.where(arg <= 0.0, 1.0, core)


def cgev_cdf(p: CgevParams, y):
    """CDF of the censored GEV family."""
    y = np.asarray(y, dtype=float)
    scalar = y.ndim == 0
    out = np.where(y < 0.0, 0.0, _gev_cdf(np.maximum(y, 0.0), p.mu, p.sigma, p.xi))
    return float(out) if scalar else out


def cgev_quantile(p: CgevParams, prob):
    prob = np.asarray(prob, dtype=float)
    scalar = prob.ndim == 0
    prob = np.atleast_1d(prob)
    if np.any((prob < 0.0) | (prob >= 1.0)):
        raise ValueError("prob must lie in [0, 1)")
    out = np.zeros(prob.shape)
    wet = prob > p.pi
    lp = -np.log(prob[wet])
    if abs(p.xi) < _XI_ZERO:
        raw = p.mu - p.sigma * np.log(lp)
    else:
        raw = p.mu + p.sigma * np.expm1(-p.xi * np.log(lp)) / p.xi
    out[wet] = np.maximum(raw, 0.0)
    return float(out[0]) if scalar else out


def cgev_random(p: CgevParams, size, rng) -> np.ndarray:
    return cgev_quantile(p, rng.random(size))


def crps_numeric(cdf, y: float, tol: float = 1e-8) -> float:
    """CRPS of an arbitrary CDF on [0, inf) by adaptive quadrature.

    Integrates (F(x) - 1{x >= y})**2, split at the observation:
    int_0^y F^2 + int_y^inf (1-F)^2.  The reported absolute tolerance is
    ``tol`` (the quadrature itself is requested a hundred times tighter).

    This is the reference implementation used to cross-check the closed
    forms; it costs two adaptive integrals per call.
    """
    if y < 0.0:
        raise ValueError("observations are nonnegative accumulations")
    eps = tol / 100.0
    head = 0.0
    if y > 0.0:
        head, _ = integrate.quad(
            lambda t: float(cdf(t)) ** 2, 0.0, y, epsabs=eps, epsrel=1e-11, limit=500
        )
    tail, _ = integrate.quad(
        lambda t: (1.0 - float(cdf(t))) ** 2, y, np.inf, epsabs=eps, epsrel=1e-11, limit=500
    )
    return head + tail


def incomplete_beta(z, a, b):
    """Non-regularized incomplete beta: int_0^z t**(a-1) (1-t)**(b-1) dt."""
    z = np.asarray(z, dtype=float)
    if np.any((z < 0.0) | (z > 1.0)):
        raise ValueError("z must lie in [0, 1]")
    if np.any(np.asarray(a) <= 0.0) or np.any(np.asarray(b) <= 0.0):
        raise ValueError("a and b must be positive")
    out = special.betainc(a, b, z) * np.exp(special.betaln(a, b))
    return float(out) if out.ndim == 0 else out


def pwm_weighted(values, weights, r: int) -> float:
    """Probability weighted moment mu_r = E[Y * (1 - F(Y))**r] of a step CDF.

    For a weighted empirical CDF with sorted atoms ``v_i`` and cumulative
    weights ``W_i`` the moment has the exact form

        mu_r = sum_i v_i * ((1 - W_{i-1})**(r+1) - (1 - W_i)**(r+1)) / (r + 1),

    obtained by integrating the quantile function against (1-q)**r.

    Parameters
    ----------
    values : array_like, ascending
    weights : array_like, nonnegative, summing to 1 within 1e-9
    r : int, nonnegative
    """
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be 1-D arrays of equal length")
    if np.any(np.diff(values) < 0.0):
        raise ValueError("values must be ascending")
    if np.any(weights < 0.0):
        raise ValueError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
    if r < 0 or int(r) != r:
        raise ValueError("r must be a nonnegative integer")
    w_hi = np.minimum(np.cumsum(weights), 1.0)
    w_lo = w_hi - weights
    s_lo = np.maximum(1.0 - w_lo, 0.0) ** (r + 1)
    s_hi = np.maximum(1.0 - w_hi, 0.0) ** (r + 1)
    return float(np.sum(values * (s_lo - s_hi)) / (r + 1))


@dataclass(frozen=True)
class PwmTriple:
    """First three probability weighted moments of a nonnegative variable.

    Any genuine distribution satisfies mu0 >= 2*mu1 and mu1 >= 1.5*mu2
    (Chebyshev's integral inequality applied to the quantile function);
    construction enforces these up to rounding.
    """

    mu0: float
    mu1: float
    mu2: float

    def __post_init__(self):
        slack = 1e-12 * max(abs(self.mu0), 1.0)
        if not self.mu0 > 0.0:
            raise ValueError(f"mu0 must be positive, got {self.mu0}")
        if self.mu1 < -slack or self.mu2 < -slack:
            raise ValueError("probability weighted moments must be nonnegative")
        if self.mu0 < 2.0 * self.mu1 - slack:
            raise ValueError(f"mu0 >= 2*mu1 violated: {self.mu0} < 2*{self.mu1}")
        if self.mu1 < 1.5 * self.mu2 - slack:
            raise ValueError(f"mu1 >= 1.5*mu2 violated: {self.mu1} < 1.5*{self.mu2}")

    @classmethod
    def from_ecdf(cls, values, weights) -> "PwmTriple":
        return cls(*(pwm_weighted(values, weights, r) for r in range(3)))


def _egp_pwm_rhs(kappa: float, xi: float):
    """(xi/sigma)-scaled theoretical PWMs of the positive EGP part.

    Returns (e0, e1, e2) with e_r = (xi/sigma) * mu_r:
        e0 = kappa*B(kappa, 1-xi) - 1
        e1 = kappa*(B(kappa, 1-xi) - B(2kappa, 1-xi)) - 1/2
        e2 = kappa*(B(kappa, 1-xi) - 2B(2kappa, 1-xi) + B(3kappa, 1-xi)) - 1/3
    """
    lk = math.log(kappa)
    g1 = math.exp(lk + special.betaln(kappa, 1.0 - xi))
    g2 = math.exp(lk + special.betaln(2.0 * kappa, 1.0 - xi))
    g3 = math.exp(lk + special.betaln(3.0 * kappa, 1.0 - xi))
    return g1 - 1.0, g1 - g2 - 0.5, g1 - 2.0 * g2 + g3 - 1.0 / 3.0


_PWM_KAPPA_BOX = (1e-3, 1e3)
_PWM_XI_BOX = (1e-6, 0.99)


def egp_fit_pwm(pwm: PwmTriple, rel_tol: float = 1e-8):
    """Invert the EGP probability-weighted-moment system.

    Solves for (kappa, sigma, xi) such that the theoretical PWMs of the
    positive EGP part match ``pwm``.  sigma is eliminated through the
    moment ratios mu1/mu0 and mu2/mu0 and the remaining 2-D system is
    solved by a quasi-Newton root finder from a deterministic sequence of
    starting points inside the box kappa in (1e-3, 1e3), xi in (1e-6, 0.99).

    Returns
    -------
    (kappa, sigma, xi) : tuple of float

    Raises
    ------
    PwmInfeasibleError
        If no parameters in the box reproduce all three moments to a
        relative residual below ``rel_tol``.
    """
    r1t = pwm.mu1 / pwm.mu0
    r2t = pwm.mu2 / pwm.mu0
    klo, khi = _PWM_KAPPA_BOX
    xlo, xhi = _PWM_XI_BOX

    def from_u(u):
        # clamped so the solver can probe extreme coordinates without overflow
        kappa = math.exp(min(max(u[0], -60.0), 60.0))
        xi = xlo + (xhi - xlo) * float(special.expit(u[1]))
        return kappa, xi

    def to_u(kappa, xi):
        frac = min(max((xi - xlo) / (xhi - xlo), 1e-9), 1.0 - 1e-9)
        return [math.log(kappa), math.log(frac / (1.0 - frac))]

    def residual(u):
        kappa, xi = from_u(u)
        e0, e1, e2 = _egp_pwm_rhs(kappa, xi)
        if not (math.isfinite(e0) and e0 > 0.0):
            return [1e6, 1e6]
        return [e1 / e0 - r1t, e2 / e0 - r2t]

    # GP-based first guess: for kappa=1, mu1/mu0 = (1-xi)/(2(2-xi))
    xi_guess = (1.0 - 4.0 * r1t) / (1.0 - 2.0 * r1t) if r1t < 0.5 else 0.1
    xi_guess = min(max(xi_guess, 0.02), 0.9)
    starts = [(1.0, xi_guess)]
    for k0 in (1.0, 0.3, 3.0, 0.05, 20.0):
        for x0 in (0.1, 0.4, 0.7):
            starts.append((k0, x0))

    for k0, x0 in starts:
        sol = optimize.root(residual, to_u(k0, x0), method="hybr")
        if not sol.success:
            continue
        kappa, xi = from_u(sol.x)
        e0, e1, e2 = _egp_pwm_rhs(kappa, xi)
        if e0 <= 0.0:
            continue
        sigma = xi * pwm.mu0 / e0
        if not (sigma > 0.0 and klo <= kappa <= khi and xlo <= xi <= xhi):
            continue
        scale = xi / sigma
        ok = (
            abs(scale * pwm.mu0 - e0) <= rel_tol * abs(e0)
            and abs(scale * pwm.mu1 - e1) <= rel_tol * max(abs(e1), 1e-12)
            and abs(scale * pwm.mu2 - e2) <= rel_tol * max(abs(e2), 1e-12)
        )
        if ok:
            return float(kappa), float(sigma), float(xi)
    raise PwmInfeasibleError(
        f"no EGP parameters with kappa in {_PWM_KAPPA_BOX}, xi in {_PWM_XI_BOX} "
        f"match moments ({pwm.mu0:.6g}, {pwm.mu1:.6g}, {pwm.mu2:.6g})"
    )
