"""Distribution-layer tests.

Reference values were frozen from an independent mpmath implementation
(30 decimal digits, tanh-sinh quadrature with the tail substituted to a
finite interval); a few follow directly from closed forms that can be
checked by hand.
"""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from raincal.distributions import (
    CgevParams,
    CsgParams,
    EgpParams,
    PwmInfeasibleError,
    PwmTriple,
    _egp_pwm_rhs,
    cgev_cdf,
    cgev_quantile,
    cgev_random,
    crps_numeric,
    csg_cdf,
    csg_quantile,
    csg_random,
    egp_cdf,
    egp_crps,
    egp_crps_batch,
    egp_fit_pwm,
    egp_mean,
    egp_pdf,
    egp_quantile,
    egp_random,
    incomplete_beta,
    pwm_weighted,
)

try:
    import mpmath
except ImportError:
    mpmath = None


# ----------------------------------------------------------------------
# parameter containers


def test_egp_params_validate():
    EgpParams(0.0, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        EgpParams(-0.1, 1.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        EgpParams(0.2, 0.0, 1.0, 0.2)
    with pytest.raises(ValueError):
        EgpParams(0.2, 1.0, -1.0, 0.2)
    with pytest.raises(ValueError):
        EgpParams(0.2, 1.0, 1.0, 1.0)


def test_params_coerce_ints_to_float():
    p = EgpParams(0, 1, 1, 0)
    assert isinstance(p.pi, float) and isinstance(p.xi, float)
    # the integer-pi regression: wet values must not be truncated
    assert egp_cdf(p, 0.5) > 0.0


def test_csg_pi_is_derived():
    p = CsgParams(delta=0.5, kappa=1.0, theta=1.0)
    assert_allclose(p.pi, 1.0 - math.exp(-0.5), rtol=1e-12)
    # explicit pi must agree with the censoring mass
    CsgParams(delta=0.5, kappa=1.0, theta=1.0, pi=p.pi)
    with pytest.raises(ValueError):
        CsgParams(delta=0.5, kappa=1.0, theta=1.0, pi=0.2)


def test_cgev_pi_is_derived():
    p = CgevParams(mu=1.0, sigma=1.0, xi=0.2)
    assert_allclose(p.pi, 0.047275749406290544, rtol=1e-12)
    with pytest.raises(ValueError):
        CgevParams(mu=0.0, sigma=1.0, xi=1.2)


# ----------------------------------------------------------------------
# EGP basics against frozen references


def test_egp_cdf_reference_values():
    assert_allclose(egp_cdf(EgpParams(0.3, 2.0, 1.0, 0.2), 1.0),
                    0.55042530719984671, rtol=1e-13)
    assert_allclose(egp_cdf(EgpParams(0.0, 1.0, 1.0, 0.2), 0.5),
                    0.37907867694084482, rtol=1e-13)
    assert_allclose(egp_cdf(EgpParams(0.55, 0.6, 2.5, 0.45), 3.0),
                    0.88678337149917811, rtol=1e-13)


def test_egp_cdf_shape_and_edges():
    p = EgpParams(0.4, 1.5, 2.0, 0.1)
    y = np.array([-1.0, 0.0, 0.5, 3.0])
    out = egp_cdf(p, y)
    assert out[0] == 0.0
    assert out[1] == p.pi
    assert np.all(np.diff(out) >= 0.0)
    assert egp_cdf(p, 1e9) == pytest.approx(1.0, abs=1e-12)


def test_egp_quantile_inverts_cdf():
    rng = np.random.default_rng(7)
    for _ in range(50):
        p = EgpParams(rng.uniform(0, 0.8), rng.uniform(0.2, 5), rng.uniform(0.1, 4),
                      rng.uniform(0.0, 0.9))
        prob = rng.uniform(p.pi + 1e-6, 0.999)
        y = egp_quantile(p, prob)
        assert_allclose(egp_cdf(p, y), prob, rtol=1e-9, atol=1e-12)
    assert egp_quantile(EgpParams(0.3, 1, 1, 0.2), 0.25) == 0.0
    with pytest.raises(ValueError):
        egp_quantile(EgpParams(0.3, 1, 1, 0.2), 1.0)


def test_egp_quantile_gp_case():
    # kappa=1, pi=0 reduces to the GP quantile sigma/xi ((1-p)^-xi - 1)
    assert_allclose(egp_quantile(EgpParams(0, 1, 1, 0.2), 0.5),
                    5.0 * (2.0 ** 0.2 - 1.0), rtol=1e-12)


def test_egp_pdf_matches_cdf_derivative():
    p = EgpParams(0.25, 1.8, 1.3, 0.15)
    h = 1e-6
    for y in (0.2, 1.0, 4.0):
        numeric = (egp_cdf(p, y + h) - egp_cdf(p, y - h)) / (2 * h)
        assert_allclose(egp_pdf(p, y), numeric, rtol=1e-6)
    assert egp_pdf(p, -0.5) == 0.0


def test_egp_mean_reference():
    assert_allclose(egp_mean(EgpParams(0.3, 2.0, 1.0, 0.2)),
                    1.3611111111111112, rtol=1e-12)
    # xi -> 0: exponential-power case, mean = (1-pi) sigma (psi(kappa+1) - psi(1))
    assert_allclose(egp_mean(EgpParams(0.0, 1.0, 1.0, 0.0)), 1.0, rtol=1e-9)


def test_egp_random_moments():
    p = EgpParams(0.35, 1.5, 2.0, 0.1)
    rng = np.random.default_rng(11)
    draws = egp_random(p, 200_000, rng)
    assert np.all(draws >= 0.0)
    assert_allclose(np.mean(draws == 0.0), p.pi, atol=0.005)
    assert_allclose(np.mean(draws), egp_mean(p), rtol=0.02)


# ----------------------------------------------------------------------
# CRPS: closed form against quadrature


def test_egp_crps_reference_values():
    assert_allclose(egp_crps(EgpParams(0.3, 2.0, 1.5, 0.25), 2.0),
                    0.6092284268465909, rtol=1e-12)
    assert_allclose(egp_crps(EgpParams(0.0, 1.0, 1.0, 0.2), 0.0),
                    0.55555555555555556, rtol=1e-12)
    assert_allclose(egp_crps(EgpParams(0.6, 0.8, 2.0, 0.45), 0.0),
                    0.15993206116291291, rtol=1e-12)
    assert_allclose(egp_crps(EgpParams(0.2, 1.3, 0.7, 0.05), 5.0),
                    3.9083824638906105, rtol=1e-12)


def test_egp_crps_gp_reduction():
    # kappa=1, pi=0, y=0 must give the GP closed form sigma/(2 - xi)
    for sigma in (0.5, 1.0, 3.0):
        for xi in (0.05, 0.2, 0.5, 0.8):
            got = egp_crps(EgpParams(0.0, 1.0, sigma, xi), 0.0)
            assert_allclose(got, sigma / (2.0 - xi), rtol=1e-9)


def test_egp_crps_matches_quadrature_grid():
    # subset of the acceptance grid; the full sweep runs there
    kappas = (0.5, 1.0, 2.5)
    sigmas = (0.4, 1.0, 3.0)
    xis = (0.05, 0.25, 0.6)
    ys = (0.0, 0.3, 2.0, 12.0)
    pis = (0.0, 0.3, 0.65)
    worst = 0.0
    i = 0
    for kappa in kappas:
        for sigma in sigmas:
            for xi in xis:
                for y in ys:
                    p = EgpParams(pis[i % 3], kappa, sigma, xi)
                    i += 1
                    closed = egp_crps(p, y)
                    quad = crps_numeric(lambda t: egp_cdf(p, t), y, tol=1e-9)
                    worst = max(worst, abs(closed - quad))
    assert worst < 1e-6


def test_egp_crps_batch_matches_scalar():
    rng = np.random.default_rng(3)
    pis = rng.uniform(0, 0.9, 40)
    kappas = rng.uniform(0.2, 4, 40)
    sigmas = rng.uniform(0.2, 3, 40)
    xis = rng.uniform(0.01, 0.9, 40)
    ys = rng.uniform(0, 8, 40)
    ys[::5] = 0.0
    batch = egp_crps_batch(pis, kappas, sigmas, xis, ys)
    for i in range(40):
        scalar = egp_crps(EgpParams(pis[i], kappas[i], sigmas[i], xis[i]), ys[i])
        assert_allclose(batch[i], scalar, rtol=1e-10, atol=1e-12)


def test_egp_crps_xi_zero_falls_back():
    p = EgpParams(0.2, 1.5, 1.0, 0.0)
    got = egp_crps(p, 1.0)
    quad = crps_numeric(lambda t: egp_cdf(p, t), 1.0, tol=1e-9)
    assert_allclose(got, quad, rtol=1e-7)


# ----------------------------------------------------------------------
# CSG and CGEV families


def test_csg_cdf_known_values():
    # exponential case: F(y) = 1 - exp(-(y + delta))
    p = CsgParams(delta=0.5, kappa=1.0, theta=1.0)
    assert_allclose(csg_cdf(p, 0.0), 1.0 - math.exp(-0.5), rtol=1e-12)
    assert_allclose(csg_cdf(p, 1.0), 1.0 - math.exp(-1.5), rtol=1e-12)
    assert csg_cdf(p, -0.2) == 0.0


def test_csg_quantile_round_trip():
    p = CsgParams(delta=0.8, kappa=2.0, theta=1.5)
    for prob in (0.5, 0.7, 0.95):
        if prob <= p.pi:
            continue
        y = csg_quantile(p, prob)
        assert_allclose(csg_cdf(p, y), prob, rtol=1e-9)
    assert csg_quantile(p, p.pi * 0.5) == 0.0


def test_csg_random_dry_fraction():
    p = CsgParams(delta=1.0, kappa=1.2, theta=1.0)
    rng = np.random.default_rng(4)
    draws = csg_random(p, 100_000, rng)
    assert np.all(draws >= 0.0)
    assert_allclose(np.mean(draws == 0.0), p.pi, atol=0.006)


def test_cgev_cdf_reference_values():
    assert_allclose(cgev_cdf(CgevParams(1.0, 1.0, 0.2), 2.5),
                    0.76389183707843084, rtol=1e-12)
    assert_allclose(cgev_cdf(CgevParams(2.0, 0.8, 0.0), 1.0),
                    0.030490413463062221, rtol=1e-12)


def test_cgev_cdf_endpoints():
    # negative shape: bounded above at mu - sigma/xi
    p = CgevParams(0.5, 1.0, -0.3)
    upper = 0.5 + 1.0 / 0.3
    assert cgev_cdf(p, upper + 0.1) == 1.0
    assert cgev_cdf(p, 4.0) == 1.0  # frozen value, already at the bound
    # positive shape: no mass below mu - sigma/xi
    q = CgevParams(5.0, 1.0, 0.5)
    assert cgev_cdf(q, 2.0) == 0.0
    assert cgev_cdf(q, -1.0) == 0.0


def test_cgev_quantile_round_trip():
    p = CgevParams(1.0, 1.0, 0.2)
    for prob in (0.3, 0.6, 0.9):
        y = cgev_quantile(p, prob)
        if y > 0.0:
            assert_allclose(cgev_cdf(p, y), prob, rtol=1e-9)
    assert cgev_quantile(p, 0.01) == 0.0


def test_cgev_random_atom():
    p = CgevParams(0.2, 1.0, 0.1)
    rng = np.random.default_rng(9)
    draws = cgev_random(p, 100_000, rng)
    assert np.all(draws >= 0.0)
    assert_allclose(np.mean(draws == 0.0), p.pi, atol=0.006)


def test_family_crps_propriety_spot_check():
    # scoring the generating parameters should beat a perturbed competitor
    # in expectation; checked with a large paired sample
    truth = CsgParams(delta=0.6, kappa=1.4, theta=1.2)
    wrong = CsgParams(delta=0.6, kappa=1.4, theta=2.4)
    rng = np.random.default_rng(21)
    ys = csg_random(truth, 400, rng)
    s_true = np.mean([crps_numeric(lambda t: csg_cdf(truth, t), y) for y in ys])
    s_wrong = np.mean([crps_numeric(lambda t: csg_cdf(wrong, t), y) for y in ys])
    assert s_true < s_wrong


# ----------------------------------------------------------------------
# numeric CRPS and the incomplete beta


def test_crps_numeric_uniform_hand_values():
    cdf = lambda x: np.clip(x, 0.0, 1.0)
    assert_allclose(crps_numeric(cdf, 0.0), 1.0 / 3.0, rtol=1e-8)
    assert_allclose(crps_numeric(cdf, 0.5), 1.0 / 12.0, rtol=1e-8)
    # observation outside the support: CRPS = 1/3 + distance
    assert_allclose(crps_numeric(cdf, 2.0), 1.0 / 3.0 + 1.0, rtol=1e-8)


def test_incomplete_beta_reference_values():
    assert_allclose(incomplete_beta(0.3, 0.7, 2.0), 0.53904396148941349, rtol=1e-13)
    assert_allclose(incomplete_beta(0.9, 1.5, 0.5), 0.94904577239825449, rtol=1e-13)
    assert_allclose(incomplete_beta(0.5, 0.75, 3.25), 0.48404842316651691, rtol=1e-13)


@pytest.mark.skipif(mpmath is None, reason="mpmath not installed")
def test_incomplete_beta_against_mpmath():
    mpmath.mp.dps = 30
    rng = np.random.default_rng(13)
    for _ in range(60):
        z = rng.uniform(1e-4, 1.0 - 1e-4)
        a = rng.uniform(0.05, 6.0)
        b = rng.uniform(0.05, 6.0)
        want = float(mpmath.betainc(a, b, 0, z))
        assert_allclose(incomplete_beta(z, a, b), want, rtol=5e-13, atol=1e-300)


# ----------------------------------------------------------------------
# probability weighted moments


def test_pwm_weighted_hand_case():
    # equal weights on (1,2,3,4): mu0 = 2.5, mu1 = 0.9375 by direct expansion
    v = np.array([1.0, 2.0, 3.0, 4.0])
    w = np.full(4, 0.25)
    assert_allclose(pwm_weighted(v, w, 0), 2.5, rtol=1e-14)
    assert_allclose(pwm_weighted(v, w, 1), 0.9375, rtol=1e-14)


def test_pwm_weighted_matches_quadrature():
    from scipy.integrate import quad

    rng = np.random.default_rng(5)
    for _ in range(10):
        n = rng.integers(3, 12)
        v = np.sort(rng.uniform(0, 5, n))
        w = rng.dirichlet(np.ones(n))
        cum = np.cumsum(w)

        def quantile(q):
            return v[np.searchsorted(cum, q, side="left").clip(0, n - 1)]

        for r in (0, 1, 2):
            want = quad(lambda q: quantile(q) * (1 - q) ** r, 0, 1,
                        points=cum[:-1].tolist(), limit=200)[0]
            got = pwm_weighted(v, w, r)
            assert_allclose(got, want, rtol=1e-7, atol=1e-10)


def test_pwm_triple_invariants():
    PwmTriple(2.5, 0.9375, 0.55)
    with pytest.raises(ValueError):
        PwmTriple(1.0, 0.6, 0.2)  # mu0 < 2 mu1
    with pytest.raises(ValueError):
        PwmTriple(-1.0, -0.6, -0.4)


def test_egp_pwm_rhs_monte_carlo():
    # e_r = (xi/sigma) mu_r of the positive EGP part; check by simulation
    kappa, xi = 1.6, 0.25
    p = EgpParams(0.0, kappa, 1.0, xi)
    rng = np.random.default_rng(17)
    u = rng.random(400_000)
    y = egp_quantile(p, u)
    e0, e1, e2 = _egp_pwm_rhs(kappa, xi)
    for r, want in ((0, e0), (1, e1), (2, e2)):
        got = xi * np.mean(y * (1 - u) ** r)
        assert_allclose(got, want, rtol=0.02)


def test_egp_fit_pwm_round_trip():
    # exact moments in, parameters out
    for kappa, sigma, xi in [(1.0, 1.0, 0.2), (2.5, 0.7, 0.45), (0.6, 3.0, 0.1),
                             (4.0, 1.5, 0.65), (0.3, 0.5, 0.35)]:
        e0, e1, e2 = _egp_pwm_rhs(kappa, xi)
        triple = PwmTriple(sigma / xi * e0, sigma / xi * e1, sigma / xi * e2)
        k, s, x = egp_fit_pwm(triple)
        assert_allclose([k, s, x], [kappa, sigma, xi], rtol=1e-6)


def test_egp_fit_pwm_from_sample():
    p = EgpParams(0.0, 1.5, 2.0, 0.2)
    rng = np.random.default_rng(23)
    y = np.sort(egp_quantile(p, rng.random(100_000)))
    w = np.full(y.size, 1.0 / y.size)
    k, s, x = egp_fit_pwm(PwmTriple.from_ecdf(y, w))
    assert_allclose(k, 1.5, rtol=0.1)
    assert_allclose(s, 2.0, rtol=0.1)
    assert abs(x - 0.2) < 0.05


def test_egp_fit_pwm_infeasible():
    # moments of a near-degenerate two-point law sit outside the EGP box
    with pytest.raises((PwmInfeasibleError, ValueError)):
        egp_fit_pwm(PwmTriple(1.0, 0.5, 1.0 / 3.0 + 1e-9))
