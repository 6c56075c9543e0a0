"""Corpus ingestion, cleaning, sparsification, windowing, synthetic data.

The cleaning pass runs per variate on a daily grid: short gaps are filled
by a quadratic through the three nearest anchors, long gaps by a linear
bridge between their boundary values, edges by the nearest known value.
Outliers (in raw-MAD units from the global median) are replaced by a local
median. A natural cubic spline backstops any value still missing. The
cleaned panel is then sparsified completely at random (per-variate seeded
keep masks) and cut into rolling history/horizon windows.

Also houses two synthetic generators: a forecasting suite (sinusoid plus
trend, bursty availability) and a one-variate visualization series with
two dense bursts, plus the grid-based reference encoders used only for
raster plots.
"""

from __future__ import annotations

import csv
import json
import os
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .encoder import EventSeries, align_events
from .errors import ConfigError, DataError
from .training import WindowItem

HISTORY_DAYS = 90
HORIZON_DAYS = 30
WINDOW_DAYS = HISTORY_DAYS + HORIZON_DAYS


@dataclass
class CleanConfig:
    """Knobs for the per-variate cleaning pass and the sparsifier."""

    window: int = 5
    gap_cap: int = 3
    outlier_mult: float = 6.0
    rate: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.window < 3 or self.window % 2 == 0:
            raise ConfigError(f"local-median window must be odd and >= 3, got {self.window}")
        if self.gap_cap < 1:
            raise ConfigError(f"gap cap must be >= 1, got {self.gap_cap}")
        if self.outlier_mult <= 0:
            raise ConfigError(f"outlier multiplier must be positive, got {self.outlier_mult}")
        if not (0.0 <= self.rate <= 1.0):
            raise ConfigError(f"sparsifying rate must lie in [0, 1], got {self.rate}")


# -- ingestion ---------------------------------------------------------------------


def load_csv(path: str, n_variates: int | None = None) -> tuple[list[str], np.ndarray]:
    """Wide daily CSV: one row per variate, one column per day.

    The header row labels the day columns; an optional leading id column is
    detected by a non-numeric header cell. Empty cells are gaps (NaN).
    Returns (ids, values [N, T]). ``n_variates`` keeps the first N rows in
    file order.
    """
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one series row")
    header = rows[0]

    def _is_number(s: str) -> bool:
        try:
            float(s)
            return True
        except ValueError:
            return False

    has_id = len(header) > 0 and not _is_number(header[0])
    first_col = 1 if has_id else 0
    n_days = len(header) - first_col
    if n_days < 1:
        raise DataError(f"{path}: no day columns found")
    ids: list[str] = []
    series: list[np.ndarray] = []
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        ids.append(row[0] if has_id else f"v{r - 2}")
        vals = np.full(n_days, np.nan)
        for c, cell in enumerate(row[first_col:]):
            cell = cell.strip()
            if cell == "":
                continue
            try:
                vals[c] = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: malformed numeric cell at row {r}, column {c + first_col + 1}: "
                    f"{cell!r}") from None
        series.append(vals)
    values = np.stack(series)
    if n_variates is not None:
        if n_variates < 1 or n_variates > values.shape[0]:
            raise DataError(
                f"requested {n_variates} variates, file has {values.shape[0]}")
        values = values[:n_variates]
        ids = ids[:n_variates]
    return ids, values


# -- cleaning ---------------------------------------------------------------------


def _lagrange3(ts: np.ndarray, ys: np.ndarray, t: float) -> float:
    """Quadratic Lagrange interpolation through three (t, y) anchors."""
    (t0, t1, t2), (y0, y1, y2) = ts, ys
    return float(
        y0 * (t - t1) * (t - t2) / ((t0 - t1) * (t0 - t2))
        + y1 * (t - t0) * (t - t2) / ((t1 - t0) * (t1 - t2))
        + y2 * (t - t0) * (t - t1) / ((t2 - t0) * (t2 - t1)))


def lagrange_fill(series: np.ndarray, gap_cap: int = 3) -> np.ndarray:
    """Fill every gap of a daily series.

    Interior gaps of length <= gap_cap: quadratic through the nearest three
    known anchors (two left + one right when two left exist, else one left
    + two right). Longer interior gaps: linear bridge between the boundary
    anchors. Leading/trailing gaps: nearest known value. Series with fewer
    than three known points fall back to nearest-value fill with a warning.
    """
    x = np.asarray(series, dtype=np.float64).copy()
    if x.ndim != 1:
        raise DataError(f"expected a 1-D series, got shape {x.shape}")
    known = np.flatnonzero(np.isfinite(x))
    if known.size == 0:
        raise DataError("series has no known values")
    if known.size == x.size:
        return x
    if known.size < 3:
        warnings.warn("fewer than 3 known points; nearest-value fill")
        return _nearest_fill(x, known)
    first, last = known[0], known[-1]
    x[:first] = x[first]
    x[last + 1:] = x[last]
    # interior gaps between consecutive anchors
    for left, right in zip(known[:-1], known[1:]):
        gap = right - left - 1
        if gap == 0:
            continue
        if gap <= gap_cap:
            left_anchors = known[known <= left]
            right_anchors = known[known >= right]
            if left_anchors.size >= 2:
                idx = np.array([left_anchors[-2], left_anchors[-1], right_anchors[0]])
            else:
                idx = np.array([left_anchors[-1], right_anchors[0], right_anchors[1]])
            for t in range(left + 1, right):
                x[t] = _lagrange3(idx.astype(np.float64), x[idx], float(t))
        else:
            span = right - left
            for t in range(left + 1, right):
                frac = (t - left) / span
                x[t] = (1.0 - frac) * x[left] + frac * x[right]
    return x


def _nearest_fill(x: np.ndarray, known: np.ndarray) -> np.ndarray:
    out = x.copy()
    missing = np.flatnonzero(~np.isfinite(x))
    for t in missing:
        j = np.argmin(np.abs(known - t))  # ties resolve to the earlier anchor
        out[t] = x[known[j]]
    return out


def mad_smooth(series: np.ndarray, outlier_mult: float = 6.0, window: int = 5) -> np.ndarray:
    """Replace gross outliers by a local median.

    Deviations are measured in raw median-absolute-deviation units from
    the global median; a zero MAD (at least half the points identical)
    leaves the series untouched.
    """
    if window < 3 or window % 2 == 0:
        raise ConfigError(f"window must be odd and >= 3, got {window}")
    x = np.asarray(series, dtype=np.float64).copy()
    mu = np.median(x)
    sigma = np.median(np.abs(x - mu))
    if sigma == 0.0:
        return x
    out_idx = np.flatnonzero(np.abs(x - mu) / sigma > outlier_mult)
    half = window // 2
    src = x.copy()
    for t in out_idx:
        lo, hi = max(0, t - half), min(x.size, t + half + 1)
        x[t] = np.median(src[lo:hi])
    return x


def spline_impute(series: np.ndarray) -> np.ndarray:
    """Fill remaining gaps with a natural cubic spline over known anchors.

    Fewer than four anchors: linear bridge (constant beyond the ends).
    """
    x = np.asarray(series, dtype=np.float64).copy()
    known = np.flatnonzero(np.isfinite(x))
    if known.size == 0:
        raise DataError("series has no known values")
    missing = np.flatnonzero(~np.isfinite(x))
    if missing.size == 0:
        return x
    if known.size < 4:
        x[missing] = np.interp(missing, known, x[known])
        return x
    spl = CubicSpline(known.astype(np.float64), x[known], bc_type="natural")
    x[missing] = spl(missing.astype(np.float64))
    return x


def clean_series(series: np.ndarray, cfg: CleanConfig) -> np.ndarray:
    """Gap fill, outlier smoothing, then a defensive spline backstop.

    The gap-filling pass already bridges every gap, so the spline stage is
    a guard for values that remain non-finite rather than a routine step.
    """
    x = lagrange_fill(series, gap_cap=cfg.gap_cap)
    x = mad_smooth(x, outlier_mult=cfg.outlier_mult, window=cfg.window)
    if not np.all(np.isfinite(x)):
        x = spline_impute(x)
    return x


# -- sparsification ------------------------------------------------------------------


def mcar_sparsify(length: int, rate: float, seed: int, series_index: int = 0) -> np.ndarray:
    """I.i.d. keep mask: each entry kept with probability 1 - rate.

    The stream is keyed by (seed, series_index) so per-series masks are
    independent yet reproducible regardless of processing order.
    """
    if not (0.0 <= rate <= 1.0):
        raise ConfigError(f"rate must lie in [0, 1], got {rate}")
    rng = np.random.default_rng([seed, series_index])
    return (rng.random(int(length)) < (1.0 - rate)).astype(np.float64)


# -- windowing ---------------------------------------------------------------------


def make_windows(values: np.ndarray, keep_mask: np.ndarray,
                 stride: int = 30, min_events: int = 1) -> list[WindowItem]:
    """Cut one cleaned panel [D, T] into rolling history/horizon windows.

    History holds only kept observations (times relative to window start,
    so every window lives on [0, 120)); queries are all horizon days per
    variate with truths from the cleaned panel. Windows with fewer than
    ``min_events`` distinct observed times are dropped (at least the
    zero-observation case); panels shorter than 120 days are skipped with
    a warning.
    """
    values = np.asarray(values, dtype=np.float64)
    keep_mask = np.asarray(keep_mask, dtype=np.float64)
    if values.ndim != 2 or values.shape != keep_mask.shape:
        raise DataError(
            f"panel and mask must both be [D, T]; got {values.shape}, {keep_mask.shape}")
    if stride < 1:
        raise ConfigError(f"window stride must be >= 1, got {stride}")
    D, T = values.shape
    if T < WINDOW_DAYS:
        warnings.warn(f"panel has {T} days < {WINDOW_DAYS}; no windows produced")
        return []
    items: list[WindowItem] = []
    for start in range(0, T - WINDOW_DAYS + 1, stride):
        hist = slice(start, start + HISTORY_DAYS)
        per_variate = []
        n_obs = 0
        for d in range(D):
            days = np.flatnonzero(keep_mask[d, hist] == 1.0)
            n_obs += days.size
            per_variate.append((days.astype(np.float64), values[d, hist][days]))
        if n_obs == 0:
            warnings.warn(f"window at day {start} has no observed events; dropped")
            continue
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            series = align_events(per_variate)
        if series.n_events < min_events:
            warnings.warn(f"window at day {start} has {series.n_events} events "
                          f"< {min_events}; dropped")
            continue
        q_times = np.arange(HISTORY_DAYS, WINDOW_DAYS, dtype=np.float64)
        queries = [q_times.copy() for _ in range(D)]
        targets = [values[d, start + HISTORY_DAYS:start + WINDOW_DAYS].copy()
                   for d in range(D)]
        items.append(WindowItem(series=series, query_times=queries, targets=targets))
    return items


def split_windows(items: list[WindowItem],
                  fractions: tuple[float, float, float] = (0.7, 0.1, 0.2)) -> dict:
    """Chronological split of one panel's windows into train/val/test."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ConfigError(f"split fractions must sum to 1, got {fractions}")
    n = len(items)
    # cumulative boundaries keep val nonempty on small panels (5 -> 3/1/1)
    a = int(np.floor(fractions[0] * n + 1e-9))
    b = int(np.floor((fractions[0] + fractions[1]) * n + 1e-9))
    return {"train": items[:a], "val": items[a:b], "test": items[b:]}


def merge_splits(parts: list[dict]) -> dict:
    out = {"train": [], "val": [], "test": []}
    for p in parts:
        for k in out:
            out[k].extend(p[k])
    return out


# -- target scaling -------------------------------------------------------------------


class Standardizer:
    """Per-variate z-scaling fit on observed history entries of one split."""

    def __init__(self, mean: np.ndarray, std: np.ndarray):
        self.mean = np.asarray(mean, dtype=np.float64)
        self.std = np.asarray(std, dtype=np.float64)
        if np.any(self.std <= 0):
            raise ConfigError("standardizer needs positive scales")

    @classmethod
    def fit(cls, items: list[WindowItem]) -> "Standardizer":
        if not items:
            raise DataError("cannot fit a standardizer on an empty split")
        D = items[0].series.n_variates
        sums = np.zeros(D)
        sqs = np.zeros(D)
        counts = np.zeros(D)
        for it in items:
            m = it.series.mask == 1.0
            for d in range(D):
                vals = it.series.values[m[:, d], d]
                sums[d] += vals.sum()
                sqs[d] += (vals * vals).sum()
                counts[d] += vals.size
        counts = np.maximum(counts, 1.0)
        mean = sums / counts
        var = np.maximum(sqs / counts - mean * mean, 0.0)
        std = np.sqrt(var)
        std[std < 1e-8] = 1.0
        return cls(mean, std)

    def transform_item(self, item: WindowItem) -> WindowItem:
        s = item.series
        scaled = (s.values - self.mean) / self.std * (s.mask == 1.0)
        series = EventSeries(times=s.times.copy(), values=scaled, mask=s.mask.copy())
        targets = [(np.asarray(y) - self.mean[d]) / self.std[d]
                   for d, y in enumerate(item.targets)]
        return WindowItem(series=series,
                          query_times=[np.asarray(q).copy() for q in item.query_times],
                          targets=targets)

    def inverse(self, preds: list[np.ndarray | None]) -> list[np.ndarray | None]:
        return [None if p is None else p * self.std[d] + self.mean[d]
                for d, p in enumerate(preds)]

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.array(d["mean"]), np.array(d["std"]))


# -- synthetic forecasting suite ----------------------------------------------------


@dataclass
class SuiteConfig:
    """Seeded sinusoid-plus-trend suite, observed through MCAR dropout.

    With ``bursts`` on, an availability schedule alternates dense bursts
    (shorter than 16 events) with near-silent stretches, synchronized
    across variates, so aggressive event pooling has something to destroy.
    """

    n_series: int = 8
    n_variates: int = 4
    n_days: int = 240
    rate: float = 0.5
    noise_std: float = 0.02
    bursts: bool = False
    burst_days: tuple[int, int] = (9, 13)
    quiet_days: tuple[int, int] = (12, 18)
    burst_keep: float = 0.95
    quiet_keep: float = 0.05
    seed: int = 0


def synth_suite_panel(cfg: SuiteConfig, series_index: int) -> tuple[np.ndarray, np.ndarray]:
    """One multivariate panel: cleaned truth [D, T] and keep mask [D, T]."""
    rng = np.random.default_rng([cfg.seed, series_index, 0])
    D, T = cfg.n_variates, cfg.n_days
    t = np.arange(T, dtype=np.float64)
    periods = np.array([20.0, 30.0, 40.0, 60.0])
    values = np.empty((D, T))
    for d in range(D):
        period = periods[d % periods.size]
        amp = rng.uniform(0.6, 1.4)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        # total drift comparable to the amplitude whatever the panel length
        slope = rng.uniform(-1.2, 1.2) / T
        noise = rng.normal(0.0, cfg.noise_std, size=T)
        values[d] = amp * np.sin(2.0 * np.pi * t / period + phase) + slope * t + noise
    if cfg.bursts:
        # shared burst schedule, independent per-variate keep draws
        sched_rng = np.random.default_rng([cfg.seed, series_index, 1])
        keep_prob = np.empty(T)
        pos = 0
        in_burst = True
        while pos < T:
            span = int(sched_rng.integers(*cfg.burst_days) if in_burst
                       else sched_rng.integers(*cfg.quiet_days))
            keep_prob[pos:pos + span] = (cfg.burst_keep if in_burst
                                         else cfg.quiet_keep)
            pos += span
            in_burst = not in_burst
        avail_rng = np.random.default_rng([cfg.seed, series_index, 2])
        avail = (avail_rng.random((D, T)) < keep_prob).astype(np.float64)
    else:
        avail = np.ones((D, T))
    mask = np.empty((D, T))
    for d in range(D):
        mcar = mcar_sparsify(T, cfg.rate, cfg.seed, series_index * D + d)
        mask[d] = avail[d] * mcar
    return values, mask


def synth_suite(cfg: SuiteConfig, window_stride: int = 30,
                min_events: int = 16) -> dict:
    """Full suite: per-series panels, windowed and chronologically split.

    Windows keep at least ``min_events`` observed times so that every
    pooling stride in the search grid (up to 16) remains applicable.
    """
    parts = []
    for i in range(cfg.n_series):
        values, mask = synth_suite_panel(cfg, i)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            items = make_windows(values, mask, stride=window_stride,
                                 min_events=min_events)
        parts.append(split_windows(items))
    return merge_splits(parts)


# -- visualization dataset -----------------------------------------------------------


@dataclass
class VizConfig:
    """One-variate series with a sparse phase and two dense bursts."""

    horizon: float = 100.0
    n_sparse: int = 12
    n_dense: int = 40
    noise_std: float = 0.02
    delta_threshold: float = 0.3
    conv_kernel: tuple = (0.25, 0.5, 0.25)
    conv_threshold: float = 1.0
    grid_size: int = 100
    seed: int = 0
    tau: float = 2.0
    v_th: float = 0.5
    gamma: float = 1.0

    def __post_init__(self):
        if self.n_sparse < 1 or self.n_dense < 1:
            raise ConfigError("need at least one sample in each phase")
        if self.grid_size < 2:
            raise ConfigError("grid needs at least 2 points")
        if self.tau <= 0 or self.v_th <= 0:
            raise ConfigError("tau and v_th must be positive")


def viz_baseline(t: np.ndarray) -> np.ndarray:
    """Slow sinusoid plus two unit-height bumps late in the horizon."""
    t = np.asarray(t, dtype=np.float64)
    return (0.5 * np.sin(2.0 * np.pi * t / 40.0)
            + np.exp(-0.5 * ((t - 70.0) / 3.0) ** 2)
            + np.exp(-0.5 * ((t - 85.0) / 2.0) ** 2))


def synth_viz_series(cfg: VizConfig) -> dict:
    """Irregular samples (sparse then dense phase) and a regular grid twin.

    Returns {"t_irr", "x_irr", "t_grid", "x_grid"}.
    """
    rng = np.random.default_rng(cfg.seed)
    t_sparse = np.sort(rng.uniform(0.0, 60.0, size=cfg.n_sparse))
    lo = np.nextafter(60.0, np.inf)
    t_dense = np.sort(rng.uniform(lo, cfg.horizon, size=cfg.n_dense))
    t_irr = np.concatenate([t_sparse, t_dense])
    x_irr = viz_baseline(t_irr) + rng.normal(0.0, cfg.noise_std, size=t_irr.size)
    t_grid = np.linspace(0.0, cfg.horizon, cfg.grid_size)
    x_grid = viz_baseline(t_grid) + rng.normal(0.0, cfg.noise_std, size=t_grid.size)
    return {"t_irr": t_irr, "x_irr": x_irr, "t_grid": t_grid, "x_grid": x_grid}


def baseline_encoders(data: dict, cfg: VizConfig) -> dict:
    """Three reference spike trains for the raster figure.

    delta/conv fire on the regular grid; the event-driven reference runs
    the scalar gap-decay recurrence directly on the irregular stamps.
    Returns {name: (times, spikes)}.
    """
    x_grid = np.asarray(data["x_grid"], dtype=np.float64)
    t_grid = np.asarray(data["t_grid"], dtype=np.float64)
    # change-detection on the grid: first sample never fires
    d_spk = np.zeros(t_grid.size)
    d_spk[1:] = (np.abs(np.diff(x_grid)) >= cfg.delta_threshold).astype(np.float64)
    # smoothing kernel + z-score threshold on the grid
    kern = np.asarray(cfg.conv_kernel, dtype=np.float64)
    y = np.convolve(x_grid, kern, mode="same")
    sd = y.std()
    if sd == 0.0:
        c_spk = np.zeros(t_grid.size)
    else:
        c_spk = (((y - y.mean()) / sd) >= cfg.conv_threshold).astype(np.float64)
    # event-driven scalar recurrence on the irregular stamps
    t_irr = np.asarray(data["t_irr"], dtype=np.float64)
    x_irr = np.asarray(data["x_irr"], dtype=np.float64)
    gaps = np.empty_like(t_irr)
    gaps[0] = 0.0
    gaps[1:] = np.diff(t_irr)
    beta = np.exp(-gaps / cfg.tau)
    e_spk = np.zeros(t_irr.size)
    v = 0.0
    for k in range(t_irr.size):
        m = beta[k] * v + (1.0 - beta[k]) * cfg.gamma * (x_irr[k] - cfg.delta_threshold)
        s = 1.0 if m >= cfg.v_th else 0.0
        v = m - cfg.v_th * s
        e_spk[k] = s
    return {"delta": (t_grid, d_spk), "conv": (t_grid, c_spk), "event": (t_irr, e_spk)}


# -- dataset directory I/O -------------------------------------------------------------


def write_dataset(out_dir: str, splits: dict, meta: dict) -> None:
    """Write meta.json plus one CSV per split (window, role, t, variate, value)."""
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "meta.json"), "w") as f:
        json.dump(meta, f, sort_keys=True, indent=2)
        f.write("\n")
    for split, items in splits.items():
        path = os.path.join(out_dir, f"{split}.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["window", "role", "t", "variate", "value"])
            for i, item in enumerate(items):
                s = item.series
                for k in range(s.n_events):
                    for d in range(s.n_variates):
                        if s.mask[k, d] == 1.0:
                            w.writerow([i, "obs", repr(float(s.times[k])), d,
                                        repr(float(s.values[k, d]))])
                for d, (q, y) in enumerate(zip(item.query_times, item.targets)):
                    for t, val in zip(np.asarray(q), np.asarray(y)):
                        w.writerow([i, "query", repr(float(t)), d, repr(float(val))])


def read_dataset(data_dir: str) -> tuple[dict, dict]:
    """Inverse of write_dataset. Returns (splits, meta)."""
    meta_path = os.path.join(data_dir, "meta.json")
    if not os.path.exists(meta_path):
        raise DataError(f"{data_dir}: missing meta.json")
    with open(meta_path) as f:
        meta = json.load(f)
    n_variates = int(meta["n_variates"])
    splits = {}
    for split in ("train", "val", "test"):
        path = os.path.join(data_dir, f"{split}.csv")
        if not os.path.exists(path):
            continue
        windows: dict[int, dict] = {}
        with open(path, newline="") as f:
            r = csv.reader(f)
            header = next(r)
            if header != ["window", "role", "t", "variate", "value"]:
                raise DataError(f"{path}: unexpected header {header}")
            for row in r:
                i, role, t, d, v = int(row[0]), row[1], float(row[2]), int(row[3]), float(row[4])
                w = windows.setdefault(i, {"obs": [[] for _ in range(n_variates)],
                                           "q": [[] for _ in range(n_variates)]})
                if role == "obs":
                    w["obs"][d].append((t, v))
                elif role == "query":
                    w["q"][d].append((t, v))
                else:
                    raise DataError(f"{path}: unknown role {role!r}")
        items = []
        for i in sorted(windows):
            w = windows[i]
            per_variate = []
            for d in range(n_variates):
                if w["obs"][d]:
                    ts, vs = zip(*w["obs"][d])
                else:
                    ts, vs = (), ()
                per_variate.append((np.array(ts, dtype=np.float64),
                                    np.array(vs, dtype=np.float64)))
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                series = align_events(per_variate)
            queries, targets = [], []
            for d in range(n_variates):
                if w["q"][d]:
                    qs, ys = zip(*w["q"][d])
                else:
                    qs, ys = (), ()
                queries.append(np.array(qs, dtype=np.float64))
                targets.append(np.array(ys, dtype=np.float64))
            items.append(WindowItem(series=series, query_times=queries, targets=targets))
        splits[split] = items
    return splits, meta


def prepare_corpus(csv_path: str, clean_cfg: CleanConfig, n_variates: int | None = None,
                   window_stride: int = 30) -> tuple[dict, dict]:
    """Full ingestion pipeline for one wide CSV: clean, sparsify, window, split."""
    ids, raw = load_csv(csv_path, n_variates=n_variates)
    D, T = raw.shape
    cleaned = np.stack([clean_series(raw[d], clean_cfg) for d in range(D)])
    mask = np.stack([mcar_sparsify(T, clean_cfg.rate, clean_cfg.seed, d)
                     for d in range(D)])
    items = make_windows(cleaned, mask, stride=window_stride)
    splits = split_windows(items)
    meta = {
        "source": os.path.basename(csv_path),
        "ids": ids,
        "n_variates": D,
        "n_days": T,
        "rate": clean_cfg.rate,
        "seed": clean_cfg.seed,
        "clean": {"window": clean_cfg.window, "gap_cap": clean_cfg.gap_cap,
                  "outlier_mult": clean_cfg.outlier_mult},
        "history_days": HISTORY_DAYS,
        "horizon_days": HORIZON_DAYS,
        "window_stride": window_stride,
        "splits": {k: len(v) for k, v in splits.items()},
    }
    return splits, meta
