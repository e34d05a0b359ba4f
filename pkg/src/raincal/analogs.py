"""Analog ensembles: nearest past forecasts by windowed predictor distance.

For a query day t at one station, candidate archive days t' are compared
through

    d(t, t') = sum_j (w_j / s_j) * sqrt( sum_{i=-tw..tw} (F_{j,t+i} - F_{j,t'+i})^2 )

where j runs over the chosen predictors, s_j is the predictor's standard
deviation over the training archive, w_j is a predictor weight and the
inner sum runs over a window of +-tw archive steps around both days.
The observations of the n_analogs nearest candidates (ties broken toward
the earlier candidate) form the predictive ensemble.

Weighting modes
---------------
uniform      every predictor weight 1 (use with any predictor set).
correlation  w_j = |Pearson r| between predictor and observation on the
             training archive.
vsf          w_j proportional to the cross-station selection frequency of
             the predictor (see the selection module).

Predictors that are constant on the training archive carry no distance
information; they get weight zero and a warning.

The archive sequence of a station holds both training and query days
sorted by valid time, so a window can reach forecasts of neighboring
days regardless of which side of the split they fall on; observations
are only ever read from training days.  A candidate needs a verified
observation at its center and a complete window; a query with an
incomplete window (sequence edge or a gap in the time grid) is an error
in ``find_analogs`` and is skipped, with a note, by the batch helper.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .data import derive_matrix
from .prediction import EnsemblePrediction

__all__ = [
    "ANALOG_MODES",
    "AnalogConfig",
    "StationArchive",
    "make_weighting",
    "build_station_archive",
    "find_analogs",
    "analog_predict",
]

ANALOG_MODES = ("uniform", "correlation", "vsf")


@dataclass(frozen=True)
class AnalogConfig:
    """Search settings: ensemble size, window half-width (archive steps)
    and predictor weighting mode."""

    n_analogs: int = 25
    t_tilde: int = 1
    mode: str = "uniform"
    frequencies: dict | None = None

    def __post_init__(self):
        if self.n_analogs < 2:
            raise ValueError("need at least two analogs")
        if self.t_tilde < 0:
            raise ValueError("window half-width must be nonnegative")
        if self.mode not in ANALOG_MODES:
            raise ValueError(f"unknown weighting mode {self.mode!r}")
        if self.mode == "vsf" and self.frequencies is None:
            raise ValueError("vsf weighting needs selection frequencies")


def make_weighting(mode: str, matrix: np.ndarray, obs: np.ndarray, names,
                   frequencies: dict | None = None) -> np.ndarray:
    """Predictor weight vector for one station's training archive.

    ``matrix`` and ``obs`` are the training rows (used by the correlation
    mode); constant predictors or constant observations yield weight zero
    with a warning.
    """
    names = list(names)
    p = len(names)
    if mode == "uniform":
        return np.ones(p)
    if mode == "vsf":
        freq = np.array([float(frequencies.get(n, 0.0)) for n in names])
        if np.all(freq == 0.0):
            raise ValueError("no chosen predictor overlaps the selection frequencies")
        return freq / freq.sum()
    # correlation
    w = np.zeros(p)
    oy = obs - obs.mean()
    sy = np.sqrt(np.sum(oy * oy))
    for j in range(p):
        col = matrix[:, j] - matrix[:, j].mean()
        sx = np.sqrt(np.sum(col * col))
        if sx == 0.0 or sy == 0.0:
            warnings.warn(f"correlation undefined for {names[j]}; weight set to zero",
                          stacklevel=2)
            continue
        w[j] = abs(float(np.dot(col, oy) / (sx * sy)))
    return w


@dataclass(frozen=True)
class StationArchive:
    """Time-sorted predictor sequence of one station plus search metadata."""

    station_id: str
    times: np.ndarray  # datetime64[s], strictly increasing
    matrix: np.ndarray  # (n_steps, n_predictors)
    names: tuple
    obs: np.ndarray  # NaN where unverified
    candidate: np.ndarray  # bool: training day with verified observation
    step: np.timedelta64
    scales: np.ndarray
    weights: np.ndarray
    _pos: dict = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_pos", {t: i for i, t in enumerate(self.times.astype("int64"))})

    def position(self, valid_time) -> int:
        key = int(np.datetime64(valid_time, "s").astype("int64"))
        if key not in self._pos:
            raise KeyError(f"valid time {valid_time} not in the archive of {self.station_id}")
        return self._pos[key]


def _infer_step(times: np.ndarray) -> np.timedelta64:
    diffs = np.diff(times.astype("int64"))
    if diffs.size == 0:
        raise ValueError("archive needs at least two time steps")
    if np.any(diffs <= 0):
        raise ValueError("duplicate valid times in one station's archive")
    return np.timedelta64(int(np.median(diffs)), "s")


def build_station_archive(train_ds, predictor_set, config: AnalogConfig,
                          query_ds=None) -> StationArchive:
    """Archive for one station (``train_ds`` restricted to it already).

    ``query_ds`` rows of the same station are merged into the sequence so
    query windows can be formed; their observations are never candidates.
    """
    stations = set(train_ds.station_ids)
    if len(stations) != 1:
        raise ValueError("build_station_archive expects a single-station dataset")
    sid = stations.pop()

    parts = [train_ds]
    flags = [np.ones(train_ds.n_cases, dtype=bool)]
    if query_ds is not None:
        sub = query_ds.for_station(sid)
        if sub.n_cases:
            parts.append(sub)
            flags.append(np.zeros(sub.n_cases, dtype=bool))

    times = np.concatenate([p.valid_times for p in parts])
    in_train = np.concatenate(flags)
    obs = np.concatenate([p.obs for p in parts])
    names = predictor_set.columns
    matrix = np.vstack([derive_matrix(p, predictor_set) for p in parts])

    order = np.argsort(times, kind="stable")
    times, matrix, obs, in_train = times[order], matrix[order], obs[order], in_train[order]
    if np.any(np.diff(times.astype("int64")) == 0):
        raise ValueError(f"duplicate valid times for station {sid}")

    train_rows = matrix[in_train]
    scales = np.std(train_rows, axis=0, ddof=1) if train_rows.shape[0] > 1 else np.ones(matrix.shape[1])
    train_obs_mask = in_train & np.isfinite(obs)
    weights = make_weighting(config.mode, train_rows[np.isfinite(obs[in_train])],
                             obs[train_obs_mask], names, config.frequencies)
    dead = scales == 0.0
    if np.any(dead & (weights > 0.0)):
        for j in np.nonzero(dead & (weights > 0.0))[0]:
            warnings.warn(f"predictor {names[j]} is constant on the archive; weight set to zero",
                          stacklevel=2)
        weights = np.where(dead, 0.0, weights)
    if np.all(weights == 0.0):
        raise ValueError("all predictor weights are zero; no usable distance")
    scales = np.where(dead, 1.0, scales)

    return StationArchive(
        station_id=sid,
        times=times,
        matrix=matrix,
        names=tuple(names),
        obs=obs,
        candidate=train_obs_mask,
        step=_infer_step(times),
        scales=scales,
        weights=weights,
    )


def _window_ok(archive: StationArchive, pos: int, tw: int) -> bool:
    n = archive.times.size
    if pos - tw < 0 or pos + tw >= n:
        return False
    lo = archive.times[pos - tw : pos + tw + 1].astype("int64")
    expect = archive.times[pos].astype("int64") + np.arange(-tw, tw + 1) * int(
        archive.step.astype("int64")
    )
    return bool(np.array_equal(lo, expect))


def find_analogs(archive: StationArchive, valid_time, config: AnalogConfig) -> EnsemblePrediction:
    """Analog ensemble for the archive row at ``valid_time``.

    Raises ValueError when the query window is incomplete or fewer than
    ``n_analogs`` candidates with complete windows exist.
    """
    tw = config.t_tilde
    qpos = archive.position(valid_time)
    if not _window_ok(archive, qpos, tw):
        raise ValueError(
            f"incomplete forecast window around {valid_time} for station {archive.station_id}"
        )

    cand = np.nonzero(archive.candidate)[0]
    cand = cand[cand != qpos]
    if tw > 0:
        cand = cand[(cand - tw >= 0) & (cand + tw < archive.times.size)]
    if cand.size == 0:
        raise ValueError("no analog candidates with observations")

    active = np.nonzero(archive.weights > 0.0)[0]
    step_s = int(archive.step.astype("int64"))
    times_i = archive.times.astype("int64")
    ok = np.ones(cand.size, dtype=bool)
    for i in range(-tw, tw + 1):
        ok &= times_i[cand + i] == times_i[cand] + i * step_s
    cand = cand[ok]
    if cand.size < config.n_analogs:
        raise ValueError(
            f"only {cand.size} candidates with complete windows; need {config.n_analogs}"
        )
    # Per-predictor windowed squared differences, vectorized over candidates.
    sq = np.zeros((cand.size, active.size))
    for i in range(-tw, tw + 1):
        diff = archive.matrix[cand + i][:, active] - archive.matrix[qpos + i][active]
        sq += diff * diff
    dist = np.sqrt(sq) @ (archive.weights[active] / archive.scales[active])

    order = np.lexsort((times_i[cand], dist))[: config.n_analogs]
    chosen = cand[order]
    return EnsemblePrediction(archive.obs[chosen])


def analog_predict(train_ds, query_ds, predictor_set, config: AnalogConfig):
    """Analog predictions for every query case, station by station.

    Returns (predictions, skipped): predictions is a list aligned with
    the query cases (None where an analog could not be formed) and
    skipped maps the affected case indexes to the reason.
    """
    preds = [None] * query_ds.n_cases
    skipped = {}
    for sid in sorted(set(query_ds.station_ids)):
        train_s = train_ds.for_station(sid)
        if train_s.n_cases == 0:
            for i in np.nonzero(query_ds.station_ids == sid)[0]:
                skipped[int(i)] = "no training archive for station"
            continue
        archive = build_station_archive(train_s, predictor_set, config, query_ds=query_ds)
        for i in np.nonzero(query_ds.station_ids == sid)[0]:
            try:
                preds[int(i)] = find_analogs(archive, query_ds.valid_times[i], config)
            except (ValueError, KeyError) as exc:
                skipped[int(i)] = str(exc)
    return preds, skipped
