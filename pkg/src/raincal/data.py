"""Case ingestion, predictor derivation and cross-validation plans.

A case is one (station, valid time) pair: the verified 6-h accumulation,
the K raw ensemble members valid for it, and any auxiliary deterministic
fields.  The canonical CSV layout is

    station_id,valid_time,lead_time,obs,member_001,...,member_K,<aux columns>

with ISO-8601 UTC timestamps.  Rows without a verified observation are
kept and flagged forecast-only.  Rainfall columns must be nonnegative.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

__all__ = [
    "SchemaError",
    "Station",
    "ForecastRecord",
    "Dataset",
    "PredictorSet",
    "SplitPlan",
    "load_dataset",
    "derive_predictors",
    "derive_matrix",
    "make_cv_plan",
    "set_c",
    "set_a",
    "available_predictors",
    "DERIVED_PREDICTORS",
    "PREDICTOR_VOCABULARY",
]


class SchemaError(ValueError):
    """The CSV layout does not match the documented schema."""


# Statistics computed from the raw members.  Quantile-type statistics use
# linear interpolation (numpy's default, type 7).
DERIVED_PREDICTORS = (
    "MEAN",
    "MED",
    "Q10",
    "Q90",
    "SIGMA",
    "IQR",
    "PR0",
    "PR1",
    "PR3",
    "PR5",
    "PR10",
    "PR20",
)

_PR_THRESHOLDS = {"PR0": 0.0, "PR1": 1.0, "PR3": 3.0, "PR5": 5.0, "PR10": 10.0, "PR20": 20.0}

_AUX_SCALARS = (
    "HRES",
    "CTRL",
    "HU1500",
    "UX",
    "VX",
    "FX",
    "TCC",
    "RR6CV",
    "CAPE",
)

_AUX_QUANTILE_FAMILIES = (
    "HU",
    "P",
    "TCC",
    "RR6CV",
    "U10",
    "V10",
    "U500",
    "V500",
    "FF500",
    "TPW850",
    "FLIR6",
    "FLVIS6",
    "T",
    "FF10",
)

PREDICTOR_VOCABULARY = frozenset(
    DERIVED_PREDICTORS
    + _AUX_SCALARS
    + tuple(f"{v}_q{q}" for v in _AUX_QUANTILE_FAMILIES for q in (10, 50, 90))
)


@dataclass(frozen=True)
class Station:
    id: str
    latitude: float | None = None
    longitude: float | None = None


@dataclass(frozen=True)
class ForecastRecord:
    """Single-case view: members, auxiliaries and the verified observation."""

    station_id: str
    valid_time: np.datetime64
    lead_time: float
    members: np.ndarray
    aux: dict
    obs: float  # NaN when forecast-only

    @property
    def has_obs(self) -> bool:
        return bool(np.isfinite(self.obs))


@dataclass(frozen=True)
class PredictorSet:
    """Ordered predictor list; names come from the documented vocabulary."""

    name: str
    columns: tuple

    def __post_init__(self):
        if len(self.columns) == 0:
            raise ValueError("predictor set must not be empty")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("duplicate predictor names")
        unknown = [c for c in self.columns if c not in PREDICTOR_VOCABULARY]
        if unknown:
            raise ValueError(f"unknown predictor names: {unknown}")
        object.__setattr__(self, "columns", tuple(self.columns))


def set_c() -> PredictorSet:
    """The classical quartet: high-resolution run, control run, ensemble mean, rain probability."""
    return PredictorSet("C", ("HRES", "CTRL", "MEAN", "PR0"))


def set_a(extra_aux=()) -> PredictorSet:
    """All ensemble statistics plus the named auxiliary columns."""
    return PredictorSet("A", DERIVED_PREDICTORS + tuple(extra_aux))


class Dataset:
    """Column-oriented case table.

    Attributes
    ----------
    station_ids : ndarray of str
    valid_times : ndarray of datetime64[s]
    lead_times : ndarray of float, hours
    members : ndarray (n_cases, n_members)
    obs : ndarray (n_cases,), NaN where forecast-only
    aux : dict name -> ndarray (n_cases,)
    """

    def __init__(self, station_ids, valid_times, lead_times, members, obs, aux=None):
        self.station_ids = np.asarray(station_ids, dtype=object)
        self.valid_times = np.asarray(valid_times, dtype="datetime64[s]")
        self.lead_times = np.asarray(lead_times, dtype=float)
        self.members = np.asarray(members, dtype=float)
        self.obs = np.asarray(obs, dtype=float)
        self.aux = {k: np.asarray(v, dtype=float) for k, v in (aux or {}).items()}
        n = self.station_ids.size
        if self.members.ndim != 2 or self.members.shape[0] != n:
            raise ValueError("members must be (n_cases, n_members)")
        for name, arr in (("valid_times", self.valid_times), ("lead_times", self.lead_times),
                          ("obs", self.obs)):
            if arr.shape != (n,):
                raise ValueError(f"{name} has wrong length")
        for k, v in self.aux.items():
            if v.shape != (n,):
                raise ValueError(f"aux column {k!r} has wrong length")
        if np.any(self.members < 0.0):
            raise ValueError("negative member rainfall")
        if np.any(self.obs[np.isfinite(self.obs)] < 0.0):
            raise ValueError("negative observed rainfall")

    @property
    def n_cases(self) -> int:
        return self.station_ids.size

    def __len__(self):
        return self.n_cases

    @property
    def n_members(self) -> int:
        return self.members.shape[1]

    @property
    def stations(self):
        return sorted(set(self.station_ids.tolist()))

    @property
    def has_obs(self) -> np.ndarray:
        return np.isfinite(self.obs)

    def record(self, i: int) -> ForecastRecord:
        return ForecastRecord(
            station_id=self.station_ids[i],
            valid_time=self.valid_times[i],
            lead_time=float(self.lead_times[i]),
            members=self.members[i].copy(),
            aux={k: float(v[i]) for k, v in self.aux.items()},
            obs=float(self.obs[i]),
        )

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            self.station_ids[idx],
            self.valid_times[idx],
            self.lead_times[idx],
            self.members[idx],
            self.obs[idx],
            {k: v[idx] for k, v in self.aux.items()},
        )

    def for_station(self, station_id: str) -> "Dataset":
        return self.subset(np.nonzero(self.station_ids == station_id)[0])

    def time_order(self) -> np.ndarray:
        """Indices sorting by (valid_time, station_id), stable."""
        return np.lexsort((self.station_ids.astype(str), self.valid_times))

    def to_frame(self) -> pd.DataFrame:
        cols = {
            "station_id": self.station_ids,
            "valid_time": pd.to_datetime(self.valid_times, utc=True).strftime(
                "%Y-%m-%dT%H:%M:%SZ"
            ),
            "lead_time": self.lead_times,
            "obs": self.obs,
        }
        for j in range(self.n_members):
            cols[f"member_{j + 1:03d}"] = self.members[:, j]
        for k, v in self.aux.items():
            cols[k] = v
        return pd.DataFrame(cols)

    def to_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)


def _member_columns(columns) -> list:
    names = [c for c in columns if c.startswith("member_")]
    try:
        order = sorted(names, key=lambda c: int(c.split("_", 1)[1]))
    except ValueError as exc:
        raise SchemaError(f"member columns must be member_<int>: {exc}") from exc
    if not order:
        raise SchemaError("no member_* columns found")
    indices = [int(c.split("_", 1)[1]) for c in order]
    if indices != list(range(1, len(order) + 1)):
        raise SchemaError(f"member columns not contiguous from member_001: {order}")
    return order


def load_dataset(path, schema: dict | None = None) -> Dataset:
    """Read a case table from CSV.

    Parameters
    ----------
    path : str or Path
    schema : dict, optional
        Mapping from the canonical column roles to actual header names,
        e.g. ``{"station_id": "stn", "obs": "rr6"}``.  Roles not present
        use the canonical names.  ``members`` may map to an explicit list
        of column names; by default ``member_001..member_K`` are detected.

    Raises
    ------
    SchemaError
        Missing required columns, ragged rows, malformed timestamps or
        numbers, negative rainfall (all reported with CSV line numbers
        where applicable).
    """
    schema = dict(schema or {})
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise SchemaError(f"unparseable CSV ({exc})") from exc

    def col(role):
        return schema.get(role, role)

    for role in ("station_id", "valid_time", "lead_time", "obs"):
        if col(role) not in frame.columns:
            raise SchemaError(f"required column {col(role)!r} missing")

    member_cols = schema.get("members") or _member_columns(frame.columns)
    missing = [c for c in member_cols if c not in frame.columns]
    if missing:
        raise SchemaError(f"member columns missing: {missing}")

    # line numbers below are 1-based CSV lines including the header row
    def lineno(row_idx):
        return int(row_idx) + 2

    times = pd.to_datetime(frame[col("valid_time")], utc=True, errors="coerce")
    if times.isna().any():
        bad = int(np.nonzero(times.isna().to_numpy())[0][0])
        raise SchemaError(
            f"line {lineno(bad)}: malformed timestamp {frame[col('valid_time')].iloc[bad]!r}"
        )

    def parse_numeric(series, what, allow_blank=False):
        raw = series.str.strip()
        vals = pd.to_numeric(raw.replace("", np.nan), errors="coerce")
        blank = raw == ""
        bad_mask = vals.isna() & ~blank
        if bad_mask.any():
            bad = int(np.nonzero(bad_mask.to_numpy())[0][0])
            raise SchemaError(f"line {lineno(bad)}: malformed {what} {series.iloc[bad]!r}")
        if not allow_blank and blank.any():
            bad = int(np.nonzero(blank.to_numpy())[0][0])
            raise SchemaError(f"line {lineno(bad)}: empty {what}")
        return vals.to_numpy(dtype=float)

    lead = parse_numeric(frame[col("lead_time")], "lead_time")
    obs = parse_numeric(frame[col("obs")], "obs", allow_blank=True)
    members = np.column_stack(
        [parse_numeric(frame[c], f"member value in {c!r}") for c in member_cols]
    )

    for arr, what in ((members, "member"), (obs, "obs")):
        with np.errstate(invalid="ignore"):
            neg = np.asarray(arr) < 0.0
        if neg.any():
            bad = int(np.nonzero(neg.any(axis=1) if arr.ndim == 2 else neg)[0][0])
            raise SchemaError(f"line {lineno(bad)}: negative {what} rainfall")

    reserved = {col(r) for r in ("station_id", "valid_time", "lead_time", "obs")}
    reserved.update(member_cols)
    aux = {
        c: parse_numeric(frame[c], f"aux value in {c!r}")
        for c in frame.columns
        if c not in reserved
    }
    return Dataset(
        station_ids=frame[col("station_id")].to_numpy(dtype=object),
        valid_times=times.dt.tz_convert("UTC").dt.tz_localize(None).to_numpy(),
        lead_times=lead,
        members=members,
        obs=obs,
        aux=aux,
    )


def _derived_stat(name: str, members: np.ndarray) -> np.ndarray:
    """One ensemble statistic for a (n, K) member block."""
    if name == "MEAN":
        return members.mean(axis=1)
    if name == "MED":
        return np.quantile(members, 0.5, axis=1)
    if name == "Q10":
        return np.quantile(members, 0.1, axis=1)
    if name == "Q90":
        return np.quantile(members, 0.9, axis=1)
    if name == "SIGMA":
        return members.std(axis=1, ddof=1)
    if name == "IQR":
        return np.quantile(members, 0.75, axis=1) - np.quantile(members, 0.25, axis=1)
    if name in _PR_THRESHOLDS:
        return (members > _PR_THRESHOLDS[name]).mean(axis=1)
    raise KeyError(name)


def derive_matrix(dataset: Dataset, predictor_set: PredictorSet) -> np.ndarray:
    """Predictor matrix (n_cases, n_predictors) in the set's column order.

    Ensemble statistics are computed from the members; every other name is
    looked up among the auxiliary columns and its absence is an error.
    """
    cols = []
    for name in predictor_set.columns:
        if name in DERIVED_PREDICTORS:
            cols.append(_derived_stat(name, dataset.members))
        elif name in dataset.aux:
            cols.append(dataset.aux[name])
        else:
            raise KeyError(f"predictor {name!r} requires an aux column that is not present")
    return np.column_stack(cols)


def derive_predictors(record: ForecastRecord, predictor_set: PredictorSet) -> np.ndarray:
    """Predictor vector for one case (same semantics as ``derive_matrix``)."""
    members = record.members[None, :]
    out = np.empty(len(predictor_set.columns))
    for j, name in enumerate(predictor_set.columns):
        if name in DERIVED_PREDICTORS:
            out[j] = _derived_stat(name, members)[0]
        elif name in record.aux:
            out[j] = record.aux[name]
        else:
            raise KeyError(f"predictor {name!r} requires an aux column that is not present")
    return out


def available_predictors(dataset: Dataset) -> PredictorSet:
    """Custom set of every predictor derivable from this dataset."""
    names = list(DERIVED_PREDICTORS) + [
        k for k in sorted(dataset.aux) if k in PREDICTOR_VOCABULARY
    ]
    return PredictorSet("custom", tuple(names))


@dataclass(frozen=True)
class SplitPlan:
    """Train/validation folds over case indices."""

    scheme: str
    folds: tuple = field(default_factory=tuple)

    def __post_init__(self):
        seen = set()
        for train, val in self.folds:
            if len(train) == 0 or len(val) == 0:
                raise ValueError("empty train or validation fold")
            overlap = seen.intersection(val.tolist())
            if overlap:
                raise ValueError("case assigned to several validation folds")
            seen.update(val.tolist())
            if np.intersect1d(train, val).size:
                raise ValueError("train/validation overlap within a fold")


def make_cv_plan(dataset: Dataset, scheme: str, train_fraction: float = 0.5) -> SplitPlan:
    """Build a cross-validation plan.

    Schemes
    -------
    monthly_block_cv
        One fold per calendar month present in the data (year-month pairs);
        that month validates, all others train.
    leave_one_day_out
        One fold per distinct calendar day.
    holdout
        Single fold: the earliest ``train_fraction`` of cases (time order)
        trains, the remainder validates.
    """
    n = dataset.n_cases
    if n < 2:
        raise ValueError("need at least two cases to split")
    idx = np.arange(n)
    times = pd.to_datetime(dataset.valid_times)
    if scheme == "monthly_block_cv":
        keys = np.array([t.strftime("%Y-%m") for t in times])
    elif scheme == "leave_one_day_out":
        keys = np.array([t.strftime("%Y-%m-%d") for t in times])
    elif scheme == "holdout":
        if not 0.0 < train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        order = dataset.time_order()
        cut = int(np.ceil(train_fraction * n))
        if cut == 0 or cut == n:
            raise ValueError("holdout fraction leaves an empty side")
        return SplitPlan("holdout", ((np.sort(order[:cut]), np.sort(order[cut:])),))
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    folds = []
    for key in sorted(set(keys.tolist())):
        val = idx[keys == key]
        train = idx[keys != key]
        folds.append((train, val))
    if len(folds) < 2:
        raise ValueError(f"{scheme} needs at least two distinct blocks")
    return SplitPlan(scheme, tuple(folds))
