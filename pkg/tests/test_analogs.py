"""Analog search: distances, windows, tie-breaking and weighting modes."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from raincal.analogs import (
    ANALOG_MODES,
    AnalogConfig,
    StationArchive,
    analog_predict,
    build_station_archive,
    find_analogs,
    make_weighting,
)
from raincal.data import Dataset, PredictorSet

_T0 = np.datetime64("2012-01-01T06:00:00", "s")
_DAY = np.timedelta64(86400, "s")


def _ds(days, cape, obs, sid="s1", hu=None):
    days = list(days)
    n = len(days)
    aux = {"CAPE": np.asarray(cape, dtype=float)}
    if hu is not None:
        aux["HU1500"] = np.asarray(hu, dtype=float)
    return Dataset(
        station_ids=np.array([sid] * n),
        valid_times=np.array([_T0 + int(d) * _DAY for d in days]),
        lead_times=np.full(n, 30.0),
        members=np.zeros((n, 2)),
        obs=np.asarray(obs, dtype=float),
        aux=aux,
    )


_CAPE_SET = PredictorSet("custom", ("CAPE",))


def test_config_validation():
    with pytest.raises(ValueError):
        AnalogConfig(n_analogs=1)
    with pytest.raises(ValueError):
        AnalogConfig(t_tilde=-1)
    with pytest.raises(ValueError):
        AnalogConfig(mode="knn")
    with pytest.raises(ValueError):
        AnalogConfig(mode="vsf")
    assert ANALOG_MODES == ("uniform", "correlation", "vsf")


def test_make_weighting_modes():
    matrix = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0], [4.0, 5.0]])
    obs = np.array([2.0, 4.0, 6.0, 8.0])
    assert_allclose(make_weighting("uniform", matrix, obs, ("a", "b")), [1.0, 1.0])
    with pytest.warns(UserWarning, match="b"):
        w = make_weighting("correlation", matrix, obs, ("a", "b"))
    assert_allclose(w, [1.0, 0.0])  # perfect correlation, constant column
    anti = make_weighting("correlation", -matrix[:, :1], obs, ("a",))
    assert_allclose(anti, [1.0])
    w = make_weighting("vsf", matrix, obs, ("a", "b"),
                       frequencies={"a": 0.6, "b": 0.2})
    assert_allclose(w, [0.75, 0.25])
    w = make_weighting("vsf", matrix, obs, ("a", "b"), frequencies={"a": 0.5})
    assert_allclose(w, [1.0, 0.0])
    with pytest.raises(ValueError):
        make_weighting("vsf", matrix, obs, ("a", "b"), frequencies={"zz": 1.0})


@pytest.fixture()
def windowed_case():
    # train days 0..3 and 5..8, query day 4; CAPE ramps linearly so the
    # windowed distances are hand-computable
    train = _ds([0, 1, 2, 3, 5, 6, 7, 8],
                [1, 2, 3, 4, 6, 7, 8, 9],
                [0.0, 0.1, 0.2, 0.3, 0.5, 0.6, 0.7, 0.8])
    query = _ds([4], [5], [np.nan])
    return train, query


def test_windowed_distance_hand_case(windowed_case):
    train, query = windowed_case
    cfg = AnalogConfig(n_analogs=4, t_tilde=1)
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=query)
    assert archive.step == _DAY
    # train CAPE sample sd around mean 5: sqrt(60/7)
    assert_allclose(archive.scales, [np.sqrt(60.0 / 7.0)])
    pred = find_analogs(archive, query.valid_times[0], cfg)
    # windowed distances rank days (3,5) first, then (2,6), then (1,7)
    assert_allclose(pred.members, [0.2, 0.3, 0.5, 0.6])
    two = find_analogs(archive, query.valid_times[0], AnalogConfig(n_analogs=2, t_tilde=1))
    assert_allclose(two.members, [0.3, 0.5])


def test_tie_breaks_toward_earlier_day():
    # tw = 0; days 1, 2, 4 all sit at distance 1 from the query, so with
    # two slots the two earliest must win
    train = _ds([0, 1, 2, 4, 5, 6],
                [1, 4, 6, 6, 8, 1],
                [0.0, 0.1, 0.2, 0.4, 0.5, 0.6])
    query = _ds([3], [5], [np.nan])
    cfg = AnalogConfig(n_analogs=2, t_tilde=0)
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=query)
    pred = find_analogs(archive, query.valid_times[0], cfg)
    assert_allclose(pred.members, [0.1, 0.2])


def test_gap_in_grid_disqualifies_candidates(windowed_case):
    # drop day 2: candidates 1 and 3 lose their windows, 5..7 survive
    train = _ds([0, 1, 3, 5, 6, 7, 8],
                [1, 2, 4, 6, 7, 8, 9],
                [0.0, 0.1, 0.3, 0.5, 0.6, 0.7, 0.8])
    query = _ds([4], [5], [np.nan])
    cfg = AnalogConfig(n_analogs=3, t_tilde=1)
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=query)
    pred = find_analogs(archive, query.valid_times[0], cfg)
    assert_allclose(pred.members, [0.5, 0.6, 0.7])
    with pytest.raises(ValueError, match="candidates"):
        find_analogs(archive, query.valid_times[0], AnalogConfig(n_analogs=4, t_tilde=1))


def test_incomplete_query_window_is_an_error(windowed_case):
    train, _ = windowed_case
    query = _ds([9], [10], [np.nan])  # past the archive end
    cfg = AnalogConfig(n_analogs=2, t_tilde=1)
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=query)
    with pytest.raises(ValueError, match="incomplete"):
        find_analogs(archive, query.valid_times[0], cfg)
    with pytest.raises(KeyError):
        archive.position(_T0 + 99 * _DAY)


def test_missing_observation_excludes_candidate():
    obs = [0.0, 0.1, 0.2, np.nan, 0.5, 0.6, 0.7]
    train = _ds([0, 1, 2, 3, 5, 6, 7], [1, 2, 3, 4, 6, 7, 8], obs)
    query = _ds([4], [5], [np.nan])
    cfg = AnalogConfig(n_analogs=2, t_tilde=1)
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=query)
    pred = find_analogs(archive, query.valid_times[0], cfg)
    # day 3 would be nearest but has no verified observation
    assert 0.3 not in pred.members
    assert_allclose(pred.members, [0.2, 0.5])


def test_archive_validation():
    cfg = AnalogConfig(n_analogs=2)
    two_station = Dataset(
        station_ids=np.array(["a", "b"]),
        valid_times=np.array([_T0, _T0]),
        lead_times=np.full(2, 30.0),
        members=np.zeros((2, 2)),
        obs=np.zeros(2),
        aux={"CAPE": np.array([1.0, 2.0])},
    )
    with pytest.raises(ValueError, match="single-station"):
        build_station_archive(two_station, _CAPE_SET, cfg)
    dup = _ds([0, 0, 1, 2], [1, 2, 3, 4], [0.0, 0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="duplicate"):
        build_station_archive(dup, _CAPE_SET, cfg)
    flat = _ds([0, 1, 2, 3], [2, 2, 2, 2], [0.0, 0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="weights"):
        with pytest.warns(UserWarning, match="constant"):
            build_station_archive(flat, _CAPE_SET, cfg)


def test_correlation_weights_on_archive():
    rng = np.random.default_rng(3)
    n = 40
    cape = rng.uniform(0.0, 10.0, n)
    hu = rng.uniform(0.0, 100.0, n)
    obs = 0.4 * cape + rng.normal(0.0, 0.5, n)
    train = _ds(range(n), cape, np.maximum(obs, 0.0), hu=hu)
    cfg = AnalogConfig(n_analogs=5, mode="correlation")
    pset = PredictorSet("custom", ("CAPE", "HU1500"))
    archive = build_station_archive(train, pset, cfg)
    mask = np.isfinite(train.obs)
    r_cape = np.corrcoef(cape[mask], train.obs[mask])[0, 1]
    r_hu = np.corrcoef(hu[mask], train.obs[mask])[0, 1]
    assert_allclose(archive.weights, [abs(r_cape), abs(r_hu)], rtol=1e-12)
    assert archive.weights[0] > archive.weights[1]


def test_vsf_weights_on_archive(windowed_case):
    train, query = windowed_case
    cfg = AnalogConfig(n_analogs=2, mode="vsf", frequencies={"CAPE": 0.8})
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=query)
    assert_allclose(archive.weights, [1.0])
    pred = find_analogs(archive, query.valid_times[0], cfg)
    assert pred.members.size == 2


def test_analog_predict_batch_and_skips():
    days = range(12)
    cape = np.linspace(1.0, 12.0, 12)
    obs = np.linspace(0.0, 1.1, 12)
    train_a = _ds(days, cape, obs, sid="a")
    train_b = _ds(days, cape + 1.0, obs, sid="b")
    train = Dataset(
        station_ids=np.concatenate([train_a.station_ids, train_b.station_ids]),
        valid_times=np.concatenate([train_a.valid_times, train_b.valid_times]),
        lead_times=np.concatenate([train_a.lead_times, train_b.lead_times]),
        members=np.vstack([train_a.members, train_b.members]),
        obs=np.concatenate([train_a.obs, train_b.obs]),
        aux={"CAPE": np.concatenate([train_a.aux["CAPE"], train_b.aux["CAPE"]])},
    )
    # query day 12 gets its right-hand window member from query day 13;
    # day 14 sits at the sequence edge; the off-grid time and the unknown
    # station cannot be served at all
    query = Dataset(
        station_ids=np.array(["a", "a", "a", "b", "zz"]),
        valid_times=np.array([_T0 + 12 * _DAY, _T0 + 13 * _DAY, _T0 + 14 * _DAY,
                              _T0 + 5 * _DAY + np.timedelta64(3600, "s"),
                              _T0 + 6 * _DAY]),
        lead_times=np.full(5, 30.0),
        members=np.zeros((5, 2)),
        obs=np.full(5, np.nan),
        aux={"CAPE": np.array([3.0, 4.0, 5.0, 6.0, 7.0])},
    )
    cfg = AnalogConfig(n_analogs=3, t_tilde=1)
    preds, skipped = analog_predict(train, query, _CAPE_SET, cfg)
    assert preds[0] is not None and preds[0].members.size == 3
    assert preds[1] is not None
    assert preds[2] is None and "incomplete" in skipped[2]
    assert preds[3] is None and "incomplete" in skipped[3]
    assert skipped[4] == "no training archive for station"


def test_find_analogs_needs_candidates_with_obs():
    train = _ds([0, 1, 2, 3], [1, 2, 3, 4], [np.nan, np.nan, np.nan, np.nan])
    query = _ds([1], [2], [np.nan])
    cfg = AnalogConfig(n_analogs=2, t_tilde=0)
    # archive cannot even weight by correlation; uniform still works
    archive = build_station_archive(train, _CAPE_SET, cfg, query_ds=None)
    with pytest.raises(ValueError, match="candidates|observations"):
        find_analogs(archive, train.valid_times[1], cfg)
