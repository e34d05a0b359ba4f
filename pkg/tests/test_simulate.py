"""Synthetic scenario generator and its Monte Carlo scoring helper."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import expit

from raincal.data import load_dataset
from raincal.distributions import EgpParams, egp_crps, egp_random
from raincal.simulate import (
    ScenarioSpec,
    mc_crps,
    simulate_scenario,
    truth_frame,
)
from raincal.verification import RankHistogram, histogram_stats, rank_of_obs


def test_spec_validation():
    with pytest.raises(ValueError):
        ScenarioSpec(n_days=1)
    with pytest.raises(ValueError):
        ScenarioSpec(n_members=1)
    with pytest.raises(ValueError):
        ScenarioSpec(xi=1.0)
    with pytest.raises(ValueError):
        ScenarioSpec(dispersion=0.0)


def test_truth_at_links():
    spec = ScenarioSpec(pi0=0.2, pi1=1.0, sigma0=0.1, sigma1=0.4, kappa=0.9, xi=0.25)
    p = spec.truth_at(0.5)
    assert_allclose(p.pi, expit(0.2 - 0.5))
    assert_allclose(p.sigma, np.exp(0.1 + 0.2))
    assert p.kappa == 0.9 and p.xi == 0.25
    # wetter latent state: less dry mass, larger scale
    assert spec.truth_at(2.0).pi < p.pi < spec.truth_at(-2.0).pi
    assert spec.truth_at(2.0).sigma > p.sigma


def test_simulation_shapes_and_alignment():
    spec = ScenarioSpec(n_days=30, n_members=5, n_stations=2)
    res = simulate_scenario(spec, seed=3)
    ds = res.dataset
    assert ds.n_cases == 60
    assert ds.members.shape == (60, 5)
    assert len(res.truth) == 60
    assert res.latent.shape == (60,)
    assert ds.stations == ["S001", "S002"]
    assert set(ds.aux) == {"HRES", "CTRL", "CAPE", "HU1500"}
    # station-major ordering with the same daily grid per station
    assert list(ds.station_ids[:30]) == ["S001"] * 30
    assert ds.valid_times[0] == np.datetime64("2011-01-01T06:00:00")
    assert ds.valid_times[1] - ds.valid_times[0] == np.timedelta64(86400, "s")
    assert np.all(ds.valid_times[:30] == ds.valid_times[30:])
    assert np.all(ds.members >= 0.0) and np.all(ds.obs >= 0.0)


def test_station_draws_independent_of_station_count():
    spec1 = ScenarioSpec(n_days=25, n_members=4, n_stations=1)
    spec3 = ScenarioSpec(n_days=25, n_members=4, n_stations=3)
    one = simulate_scenario(spec1, seed=9)
    three = simulate_scenario(spec3, seed=9)
    assert_allclose(three.dataset.obs[:25], one.dataset.obs)
    assert_allclose(three.dataset.members[:25], one.dataset.members)
    assert_allclose(three.latent[:25], one.latent)
    # and different stations genuinely differ
    assert not np.allclose(three.dataset.obs[25:50], one.dataset.obs)


def test_same_seed_reproduces():
    spec = ScenarioSpec(n_days=20, n_members=6)
    a = simulate_scenario(spec, seed=5)
    b = simulate_scenario(spec, seed=5)
    c = simulate_scenario(spec, seed=6)
    assert_allclose(a.dataset.members, b.dataset.members)
    assert_allclose(a.dataset.obs, b.dataset.obs)
    assert not np.allclose(a.dataset.obs, c.dataset.obs)


def test_calibrated_scenario_has_flat_ranks():
    # dispersion 1, bias 0: the observation is exchangeable with the
    # members, so ranks are uniform
    spec = ScenarioSpec(n_days=900, n_members=7, n_stations=1)
    res = simulate_scenario(spec, seed=1)
    ds = res.dataset
    rng = np.random.default_rng(0)
    ranks = [rank_of_obs(ds.members[i], ds.obs[i], rng) for i in range(ds.n_cases)]
    s = histogram_stats(RankHistogram.from_ranks(ranks, 7))
    assert abs(s["ez"] - 0.5) < 0.03
    assert abs(s["vz"] - 1.0) < 0.15
    assert s["omega"] > 0.98


def test_underdispersion_shows_in_ranks():
    spec = ScenarioSpec(n_days=700, n_members=7, dispersion=0.5)
    res = simulate_scenario(spec, seed=2)
    ds = res.dataset
    rng = np.random.default_rng(0)
    ranks = [rank_of_obs(ds.members[i], ds.obs[i], rng) for i in range(ds.n_cases)]
    s = histogram_stats(RankHistogram.from_ranks(ranks, 7))
    assert s["vz"] > 1.3  # observations fall outside the squeezed ensemble


def test_csv_round_trip(tmp_path):
    spec = ScenarioSpec(n_days=15, n_members=4, n_stations=2)
    res = simulate_scenario(spec, seed=7)
    path = tmp_path / "sim.csv"
    res.dataset.to_csv(path)
    back = load_dataset(path)
    assert back.n_cases == res.dataset.n_cases
    assert_allclose(back.members, res.dataset.members)
    assert_allclose(back.obs, res.dataset.obs)
    assert_allclose(back.aux["CAPE"], res.dataset.aux["CAPE"])
    assert np.all(back.valid_times == res.dataset.valid_times)


def test_truth_frame_alignment():
    spec = ScenarioSpec(n_days=10, n_members=4, n_stations=2)
    res = simulate_scenario(spec, seed=11)
    tf = truth_frame(res)
    assert len(tf) == 20
    assert list(tf.columns) == ["station_id", "valid_time", "z", "pi", "kappa", "sigma", "xi"]
    i = 7
    assert tf.loc[i, "station_id"] == res.dataset.station_ids[i]
    assert_allclose(tf.loc[i, "pi"], res.truth[i].pi)
    assert_allclose(tf.loc[i, "sigma"], res.truth[i].sigma)
    assert tf.loc[0, "valid_time"] == "2011-01-01T06:00:00Z"


def test_mc_crps_matches_closed_form():
    p = EgpParams(pi=0.3, kappa=1.1, sigma=1.4, xi=0.2)

    def sampler(n, rng):
        return egp_random(p, n, rng)

    for y in (0.0, 0.8, 3.0):
        est, se = mc_crps(sampler, y, n_draws=200_000, seed=5)
        ref = egp_crps(p, y)
        assert se < 0.01
        assert abs(est - ref) < 4.0 * se


def test_mc_crps_validation():
    with pytest.raises(ValueError):
        mc_crps(lambda n, rng: np.zeros(n), 0.0, n_draws=1)
    with pytest.raises(ValueError):
        mc_crps(lambda n, rng: np.zeros(n + 1), 0.0, n_draws=10)
